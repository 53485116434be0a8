#include "dcrab/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include <json.hpp>

#include "dcrab/errors.hpp"

namespace dcrab {

using nlohmann::json;

void FourierLayer::validate() const {
  if (cos_coeffs.size() != frequencies.size() || sin_coeffs.size() != frequencies.size()) {
    throw DomainError("FourierLayer: frequencies, cos_coeffs and sin_coeffs differ in length");
  }
  for (double w : frequencies) {
    if (!std::isfinite(w)) throw DomainError("FourierLayer: non-finite frequency");
  }
}

double FourierLayer::evaluate(double t) const {
  double b = 0.0;
  for (std::size_t m = 0; m < frequencies.size(); ++m) {
    b += cos_coeffs[m] * std::cos(frequencies[m] * t) + sin_coeffs[m] * std::sin(frequencies[m] * t);
  }
  return b;
}

double FourierLayer::max_abs_frequency() const {
  double w = 0.0;
  for (double f : frequencies) w = std::max(w, std::abs(f));
  return w;
}

FourierLayer FourierLayer::zeros(std::vector<double> frequencies) {
  const std::size_t m = frequencies.size();
  return {std::move(frequencies), std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
}

std::vector<double> sample_frequencies(int harmonics, double duration, CounterRng& rng) {
  if (harmonics < 1) throw DomainError("sample_frequencies: M must be >= 1");
  if (!(duration > 0.0)) throw DomainError("sample_frequencies: T must be > 0");
  std::vector<double> out(static_cast<std::size_t>(harmonics));
  for (int m = 0; m < harmonics; ++m) {
    const double r = rng.uniform(-0.5, 0.5);
    out[static_cast<std::size_t>(m)] = 2.0 * std::numbers::pi * (m + r) / duration;
  }
  return out;
}

std::vector<double> sample_frequencies_in_interval(int harmonics, double omega_min,
                                                   double omega_max, CounterRng& rng) {
  if (harmonics < 1) throw DomainError("sample_frequencies_in_interval: M must be >= 1");
  if (!(omega_min <= omega_max) || !std::isfinite(omega_min) || !std::isfinite(omega_max)) {
    throw DomainError("sample_frequencies_in_interval: need finite omega_min <= omega_max");
  }
  std::vector<double> out(static_cast<std::size_t>(harmonics));
  for (double& w : out) w = rng.uniform(omega_min, omega_max);
  std::sort(out.begin(), out.end());
  return out;
}

DressedPulse::DressedPulse(double duration, int max_layers)
    : duration_(duration), max_layers_(max_layers) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw DomainError("DressedPulse: duration must be positive");
  }
  if (max_layers < 1) throw DomainError("DressedPulse: max_layers must be >= 1");
}

DressedPulse DressedPulse::push_layer(FourierLayer layer) const {
  if (static_cast<int>(layers_.size()) >= max_layers_) {
    throw CapacityError("DressedPulse: already holds the maximum of " +
                        std::to_string(max_layers_) + " layers");
  }
  layer.validate();
  DressedPulse out = *this;
  out.layers_.push_back(std::move(layer));
  return out;
}

DressedPulse DressedPulse::with_coefficient(std::size_t layer, std::size_t m, bool sine,
                                            double value) const {
  if (layer >= layers_.size() || m >= layers_[layer].harmonics()) {
    throw DomainError("coefficient (" + std::to_string(layer) + ", " + std::to_string(m) +
                      ") out of range");
  }
  DressedPulse out = *this;
  (sine ? out.layers_[layer].sin_coeffs : out.layers_[layer].cos_coeffs)[m] = value;
  return out;
}

double DressedPulse::evaluate(double t) const {
  if (!(t >= 0.0 && t <= duration_)) {
    throw DomainError("DressedPulse::evaluate: t = " + std::to_string(t) + " outside [0, " +
                      std::to_string(duration_) + "]");
  }
  double b = 0.0;
  for (const FourierLayer& layer : layers_) b += layer.evaluate(t);
  return b;
}

double DressedPulse::max_abs_frequency() const {
  double w = 0.0;
  for (const FourierLayer& layer : layers_) w = std::max(w, layer.max_abs_frequency());
  return w;
}

std::vector<double> extrema_grid(double duration, double max_frequency, int samples_per_period) {
  if (samples_per_period < 8) throw DomainError("extrema: samples_per_period must be >= 8");
  const double periods = duration * std::abs(max_frequency) / (2.0 * std::numbers::pi);
  const double wanted = std::ceil(samples_per_period * periods) + 1.0;
  const auto points = static_cast<std::size_t>(std::max(1024.0, wanted));
  std::vector<double> times(points);
  for (std::size_t i = 0; i < points; ++i) {
    times[i] = duration * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  times.back() = duration;
  return times;
}

std::pair<double, double> extrema(const DressedPulse& pulse, int samples_per_period) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double t : extrema_grid(pulse.duration(), pulse.max_abs_frequency(), samples_per_period)) {
    const double b = pulse.evaluate(t);
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  return {lo, hi};
}

Eigen::MatrixXd layer_design_matrix(std::span<const double> frequencies,
                                    std::span<const double> times) {
  const auto m = static_cast<Eigen::Index>(frequencies.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), 2 * m);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double t = times[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < m; ++k) {
      const double phase = frequencies[static_cast<std::size_t>(k)] * t;
      out(i, k) = std::cos(phase);
      out(i, m + k) = std::sin(phase);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const json& require(const json& object, const std::string& key, const std::string& path) {
  if (!object.is_object()) throw ParseError(path, "expected an object");
  const auto it = object.find(key);
  if (it == object.end()) throw ParseError(path + "/" + key, "missing field");
  return *it;
}

double require_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ParseError(path, "expected a number");
  return value.get<double>();
}

std::vector<double> require_numbers(const json& object, const std::string& key,
                                    const std::string& path) {
  const json& array = require(object, key, path);
  const std::string here = path + "/" + key;
  if (!array.is_array()) throw ParseError(here, "expected an array");
  std::vector<double> out;
  out.reserve(array.size());
  for (std::size_t i = 0; i < array.size(); ++i) {
    out.push_back(require_number(array[i], here + "/" + std::to_string(i)));
  }
  return out;
}

}  // namespace

std::string pulse_to_json(const DressedPulse& pulse) {
  json doc;
  doc["schema"] = kPulseSchema;
  doc["T"] = pulse.duration();
  doc["max_layers"] = pulse.max_layers();
  doc["seed"] = pulse.seed ? json(*pulse.seed) : json(nullptr);
  json layers = json::array();
  for (const FourierLayer& layer : pulse.layers()) {
    layers.push_back({{"frequencies", layer.frequencies},
                      {"cos_coeffs", layer.cos_coeffs},
                      {"sin_coeffs", layer.sin_coeffs}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

DressedPulse pulse_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  const json& schema = require(doc, "schema", "");
  if (!schema.is_string()) throw ParseError("/schema", "expected a string");
  if (schema.get<std::string>() != kPulseSchema) {
    throw UnsupportedVersionError("/schema", "unsupported pulse schema '" +
                                                 schema.get<std::string>() + "', expected '" +
                                                 kPulseSchema + "'");
  }
  const double duration = require_number(require(doc, "T", ""), "/T");
  int max_layers = kMaxDressingLayers;
  if (doc.contains("max_layers")) {
    if (!doc["max_layers"].is_number_integer()) throw ParseError("/max_layers", "expected an integer");
    max_layers = doc["max_layers"].get<int>();
  }
  DressedPulse pulse = [&] {
    try {
      return DressedPulse(duration, max_layers);
    } catch (const DomainError& e) {
      throw ParseError("/T", e.what());
    }
  }();
  if (doc.contains("seed") && !doc["seed"].is_null()) {
    if (!doc["seed"].is_number_unsigned()) throw ParseError("/seed", "expected an unsigned integer");
    pulse.seed = doc["seed"].get<std::uint64_t>();
  }
  const json& layers = require(doc, "layers", "");
  if (!layers.is_array()) throw ParseError("/layers", "expected an array");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string path = "/layers/" + std::to_string(l);
    FourierLayer layer{require_numbers(layers[l], "frequencies", path),
                       require_numbers(layers[l], "cos_coeffs", path),
                       require_numbers(layers[l], "sin_coeffs", path)};
    try {
      pulse = pulse.push_layer(std::move(layer));
    } catch (const std::exception& e) {
      throw ParseError(path, e.what());
    }
  }
  return pulse;
}

std::vector<double> pulse_shape_times(double duration, int points) {
  if (points < 2) throw DomainError("pulse shape needs at least two points");
  std::vector<double> times(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    times[static_cast<std::size_t>(i)] = duration * i / (points - 1);
  }
  times.back() = duration;
  return times;
}

void write_pulse_shape_csv(std::ostream& out, const DressedPulse& pulse, int points) {
  const auto old_precision = out.precision(12);
  out << "t,B\n";
  for (double t : pulse_shape_times(pulse.duration(), points)) {
    out << t << ',' << pulse.evaluate(t) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace dcrab
