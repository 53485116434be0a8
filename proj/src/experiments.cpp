#include "dcrab/experiments.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "dcrab/errors.hpp"

namespace dcrab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::paper_defaults() {
  ExperimentConfig config;
  for (int n = 3; n <= 9; ++n) config.targets.push_back({n, 1});
  for (int n = 4; n <= 9; ++n) config.targets.push_back({n, 2});
  return config;
}

void ExperimentConfig::validate() const {
  if (targets.empty()) throw DomainError("config: no targets");
  for (const TargetSpec& t : targets) {
    if (t.n_qubits < 2 || t.n_qubits > kMaxSubspaceQubits) {
      throw DomainError("config: N = " + std::to_string(t.n_qubits) + " outside [2, " +
                        std::to_string(kMaxSubspaceQubits) + "]");
    }
    if (t.excitations < 1 || t.excitations > t.n_qubits - 1) {
      throw DomainError("config: target (N=" + std::to_string(t.n_qubits) + ", a=" +
                        std::to_string(t.excitations) +
                        ") is a product state; a must lie in [1, N-1]");
    }
    if (t.excitations > 2 && !allow_high_excitation) {
      throw DomainError("config: a = " + std::to_string(t.excitations) +
                        " targets need allow_high_excitation = true");
    }
    if (actuator < 1 || actuator > t.n_qubits) {
      throw DomainError("config: actuator outside [1, N] for N = " + std::to_string(t.n_qubits));
    }
    if (initial_bits && (*initial_bits >> t.n_qubits) != 0) {
      throw DomainError("config: initial_bits does not fit into N = " +
                        std::to_string(t.n_qubits) + " qubits");
    }
  }
  if (harmonics < 1) throw DomainError("config: harmonics must be >= 1");
  if (max_layers < 1 || max_layers > kMaxDressingLayers) {
    throw DomainError("config: max_layers must lie in [1, 10]");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("config: threshold must lie in (0, 1)");
  if (!(bound > 0.0)) throw DomainError("config: bound must be positive");
  if (restarts < 1) throw DomainError("config: restarts must be >= 1");
  if (n_samples < 1 || n_best < 1 || n_best > n_samples + 1) {
    throw DomainError("config: need 1 <= n_best <= n_samples + 1");
  }
  if (!(coefficient_range > 0.0)) throw DomainError("config: coefficient_range must be positive");
  if (evals_per_dimension < 1) throw DomainError("config: evals_per_dimension must be >= 1");
  if (!(t_start > 0.0) || !(t_step > 0.0) || !(t_cap >= t_start)) {
    throw DomainError("config: need t_start > 0, t_step > 0 and t_cap >= t_start");
  }
  if (stall_layers < 0 || !(stall_tolerance >= 0.0 && stall_tolerance < 1.0)) {
    throw DomainError("config: need stall_layers >= 0 and stall_tolerance in [0, 1)");
  }
  if (coarse_stride < 1) throw DomainError("config: coarse_stride must be >= 1");
  if (threads < 1) throw DomainError("config: threads must be >= 1");
}

std::vector<std::string> ExperimentConfig::warnings() const {
  std::vector<std::string> out;
  for (const TargetSpec& t : targets) {
    if (t.excitations > 2) {
      out.push_back("target (N=" + std::to_string(t.n_qubits) + ", a=" +
                    std::to_string(t.excitations) +
                    ") has a > 2; expect long optimizations and frequent non-convergence");
    }
  }
  return out;
}

DcrabSettings ExperimentConfig::dcrab_settings() const {
  DcrabSettings s;
  s.search.n_samples = n_samples;
  s.search.n_best = n_best;
  s.search.local.evals_per_dimension = evals_per_dimension;
  s.search.threads = 1;
  s.coefficient_range = coefficient_range;
  s.stop_at_threshold = stop_at_threshold;
  s.stall_layers = stall_layers;
  s.stall_tolerance = stall_tolerance;
  return s;
}

SweepSettings ExperimentConfig::sweep_settings() const {
  SweepSettings s;
  s.t_start = t_start;
  s.t_step = t_step;
  s.t_cap = t_cap;
  s.restarts = restarts;
  s.coarse_stride = coarse_stride;
  return s;
}

ControlProblem ExperimentConfig::problem(const TargetSpec& target, double duration) const {
  ControlProblem p =
      make_dicke_problem(target.n_qubits, target.excitations, duration, actuator, initial_bits);
  p.bound = bound;
  p.harmonics = harmonics;
  p.threshold = threshold;
  p.max_layers = max_layers;
  p.integrator = integrator;
  return p;
}

std::uint64_t ExperimentConfig::target_seed(const TargetSpec& target) const {
  return derive_seed({seed, static_cast<std::uint64_t>(target.n_qubits),
                      static_cast<std::uint64_t>(target.excitations)});
}

std::string config_to_json(const ExperimentConfig& c) {
  json targets = json::array();
  for (const TargetSpec& t : c.targets) targets.push_back({t.n_qubits, t.excitations});
  json doc{{"schema", "dcrab-config/1"},
           {"targets", targets},
           {"allow_high_excitation", c.allow_high_excitation},
           {"actuator", c.actuator},
           {"initial_bits", c.initial_bits ? json(*c.initial_bits) : json(nullptr)},
           {"harmonics", c.harmonics},
           {"max_layers", c.max_layers},
           {"threshold", c.threshold},
           {"bound", c.bound},
           {"seed", c.seed},
           {"restarts", c.restarts},
           {"n_samples", c.n_samples},
           {"n_best", c.n_best},
           {"coefficient_range", c.coefficient_range},
           {"evals_per_dimension", c.evals_per_dimension},
           {"stop_at_threshold", c.stop_at_threshold},
           {"stall_layers", c.stall_layers},
           {"stall_tolerance", c.stall_tolerance},
           {"integrator", to_string(c.integrator)},
           {"t_start", c.t_start},
           {"t_step", c.t_step},
           {"t_cap", c.t_cap},
           {"coarse_stride", c.coarse_stride},
           {"output_dir", c.output_dir.string()},
           {"threads", c.threads}};
  return doc.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != "dcrab-config/1") {
    throw UnsupportedVersionError("/schema", "expected dcrab-config/1");
  }
  ExperimentConfig c;
  try {
    for (const json& t : doc.at("targets")) {
      c.targets.push_back({t.at(0).get<int>(), t.at(1).get<int>()});
    }
    c.allow_high_excitation = doc.at("allow_high_excitation").get<bool>();
    c.actuator = doc.at("actuator").get<int>();
    if (!doc.at("initial_bits").is_null()) c.initial_bits = doc["initial_bits"].get<BitString>();
    c.harmonics = doc.at("harmonics").get<int>();
    c.max_layers = doc.at("max_layers").get<int>();
    c.threshold = doc.at("threshold").get<double>();
    c.bound = doc.at("bound").get<double>();
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.restarts = doc.at("restarts").get<int>();
    c.n_samples = doc.at("n_samples").get<int>();
    c.n_best = doc.at("n_best").get<int>();
    c.coefficient_range = doc.at("coefficient_range").get<double>();
    c.evals_per_dimension = doc.at("evals_per_dimension").get<int>();
    c.stop_at_threshold = doc.at("stop_at_threshold").get<bool>();
    c.stall_layers = doc.at("stall_layers").get<int>();
    c.stall_tolerance = doc.at("stall_tolerance").get<double>();
    c.integrator = integrator_from_string(doc.at("integrator").get<std::string>());
    c.t_start = doc.at("t_start").get<double>();
    c.t_step = doc.at("t_step").get<double>();
    c.t_cap = doc.at("t_cap").get<double>();
    c.coarse_stride = doc.at("coarse_stride").get<int>();
    c.output_dir = doc.at("output_dir").get<std::string>();
    c.threads = doc.at("threads").get<int>();
  } catch (const json::exception& e) {
    throw ParseError("config", e.what());
  }
  return c;
}

namespace {

std::string toml_where(const std::string& source, const toml::node& node) {
  const auto& begin = node.source().begin;
  return source + ":" + std::to_string(begin.line) + ":" + std::to_string(begin.column);
}

template <typename T>
void read_toml(const toml::table& table, const char* key, T& out, const std::string& source) {
  const toml::node* node = table.get(key);
  if (node == nullptr) return;
  if constexpr (std::is_same_v<T, bool>) {
    if (!node->is_boolean()) throw ParseError(toml_where(source, *node), std::string(key) + ": expected a boolean");
    out = node->as_boolean()->get();
  } else if constexpr (std::is_integral_v<T>) {
    if (!node->is_integer()) throw ParseError(toml_where(source, *node), std::string(key) + ": expected an integer");
    const auto v = node->as_integer()->get();
    if (v < 0 && std::is_unsigned_v<T>) {
      throw ParseError(toml_where(source, *node), std::string(key) + ": must not be negative");
    }
    out = static_cast<T>(v);
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!node->is_number()) throw ParseError(toml_where(source, *node), std::string(key) + ": expected a number");
    out = node->value<double>().value();
  } else {
    if (!node->is_string()) throw ParseError(toml_where(source, *node), std::string(key) + ": expected a string");
    out = node->as_string()->get();
  }
}

std::vector<int> read_int_list(const toml::table& table, const char* key,
                               const std::string& source) {
  std::vector<int> out;
  const toml::node* node = table.get(key);
  if (node == nullptr) return out;
  const toml::array* array = node->as_array();
  if (array == nullptr) throw ParseError(toml_where(source, *node), std::string(key) + ": expected an array");
  for (const toml::node& item : *array) {
    if (!item.is_integer()) throw ParseError(toml_where(source, item), std::string(key) + ": expected integers");
    out.push_back(static_cast<int>(item.as_integer()->get()));
  }
  return out;
}

const toml::table* subtable(const toml::table& root, const char* key, const std::string& source) {
  const toml::node* node = root.get(key);
  if (node == nullptr) return nullptr;
  if (!node->is_table()) throw ParseError(toml_where(source, *node), std::string(key) + ": expected a table");
  return node->as_table();
}

}  // namespace

ExperimentConfig config_from_toml(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& begin = e.source().begin;
    throw ParseError(source + ":" + std::to_string(begin.line) + ":" + std::to_string(begin.column),
                     std::string(e.description()));
  }
  ExperimentConfig c = ExperimentConfig::paper_defaults();

  if (const toml::table* t = subtable(root, "targets", source)) {
    c.targets.clear();
    for (int n : read_int_list(*t, "w", source)) c.targets.push_back({n, 1});
    for (int n : read_int_list(*t, "dicke2", source)) c.targets.push_back({n, 2});
    if (const toml::node* extra = t->get("extra")) {
      const toml::array* pairs = extra->as_array();
      if (pairs == nullptr) throw ParseError(toml_where(source, *extra), "extra: expected an array of [N, a] pairs");
      for (const toml::node& item : *pairs) {
        const toml::array* pair = item.as_array();
        if (pair == nullptr || pair->size() != 2 || !(*pair)[0].is_integer() ||
            !(*pair)[1].is_integer()) {
          throw ParseError(toml_where(source, item), "extra: expected [N, a]");
        }
        c.targets.push_back({static_cast<int>((*pair)[0].as_integer()->get()),
                             static_cast<int>((*pair)[1].as_integer()->get())});
      }
    }
    read_toml(*t, "allow_high_excitation", c.allow_high_excitation, source);
  }
  if (const toml::table* t = subtable(root, "system", source)) {
    read_toml(*t, "actuator", c.actuator, source);
    if (t->get("initial_bits") != nullptr) {
      BitString bits = 0;
      read_toml(*t, "initial_bits", bits, source);
      c.initial_bits = bits;
    }
  }
  if (const toml::table* t = subtable(root, "optimizer", source)) {
    read_toml(*t, "harmonics", c.harmonics, source);
    read_toml(*t, "max_layers", c.max_layers, source);
    read_toml(*t, "threshold", c.threshold, source);
    read_toml(*t, "bound", c.bound, source);
    read_toml(*t, "seed", c.seed, source);
    read_toml(*t, "restarts", c.restarts, source);
    read_toml(*t, "n_samples", c.n_samples, source);
    read_toml(*t, "n_best", c.n_best, source);
    read_toml(*t, "coefficient_range", c.coefficient_range, source);
    read_toml(*t, "evals_per_dimension", c.evals_per_dimension, source);
    read_toml(*t, "stop_at_threshold", c.stop_at_threshold, source);
    read_toml(*t, "stall_layers", c.stall_layers, source);
    read_toml(*t, "stall_tolerance", c.stall_tolerance, source);
    std::string integrator = to_string(c.integrator);
    read_toml(*t, "integrator", integrator, source);
    c.integrator = integrator_from_string(integrator);
  }
  if (const toml::table* t = subtable(root, "sweep", source)) {
    read_toml(*t, "t_start", c.t_start, source);
    read_toml(*t, "t_step", c.t_step, source);
    read_toml(*t, "t_cap", c.t_cap, source);
    read_toml(*t, "coarse_stride", c.coarse_stride, source);
  }
  std::string output_dir = c.output_dir.string();
  read_toml(root, "output_dir", output_dir, source);
  c.output_dir = output_dir;
  read_toml(root, "threads", c.threads, source);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_toml(buffer.str(), path.string());
}

// ---------------------------------------------------------------------------
// Scaling fit

ScalingFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw DomainError("fit_power_law: need at least 3 points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [x, y] = points[static_cast<std::size_t>(i)];
    if (!(x > 0.0) || !(y > 0.0)) {
      throw DomainError("fit_power_law: all coordinates must be positive");
    }
    design(i, 0) = 1.0;
    design(i, 1) = std::log(x);
    rhs(i) = std::log(y);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw DomainError("fit_power_law: need at least two distinct N");
  const Eigen::Vector2d line = qr.solve(rhs);
  const Eigen::VectorXd residuals = design * line - rhs;
  const double rms = std::sqrt(residuals.squaredNorm() / static_cast<double>(n));
  return {points, std::exp(line(0)), line(1), rms};
}

// ---------------------------------------------------------------------------
// Robustness

std::string to_string(const ParameterSelector& s) {
  return std::string(s.kind == CoefficientKind::kCos ? "c" : "s") + "(" +
         std::to_string(s.layer) + "," + std::to_string(s.harmonic) + ")";
}

std::vector<double> default_epsilons() {
  std::vector<double> out;
  for (int k = -5; k <= 5; ++k) out.push_back(0.01 * k);
  return out;
}

namespace {

double coefficient(const DressedPulse& pulse, const ParameterSelector& s) {
  if (s.layer >= pulse.n_layers() || s.harmonic >= pulse.layer(s.layer).harmonics()) {
    throw DomainError("robustness: selector " + to_string(s) + " out of range");
  }
  const FourierLayer& layer = pulse.layer(s.layer);
  return s.kind == CoefficientKind::kCos ? layer.cos_coeffs[s.harmonic]
                                         : layer.sin_coeffs[s.harmonic];
}

DressedPulse perturbed(const DressedPulse& pulse, const ParameterSelector& s, double eps) {
  return pulse.with_coefficient(s.layer, s.harmonic, s.kind == CoefficientKind::kSin,
                                coefficient(pulse, s) * (1.0 + eps));
}

double grid_fidelity(const ControlProblem& problem, const DressedPulse& pulse) {
  return 1.0 - infidelity(problem, pulse);
}

}  // namespace

std::vector<std::pair<double, double>> robustness_scan_1p(const DressedPulse& pulse,
                                                          const ControlProblem& problem,
                                                          const ParameterSelector& selector,
                                                          const std::vector<double>& epsilons) {
  coefficient(pulse, selector);
  const double reference = grid_fidelity(problem, pulse);
  std::vector<std::pair<double, double>> out;
  out.reserve(epsilons.size());
  for (double eps : epsilons) {
    const double f = eps == 0.0 ? reference : grid_fidelity(problem, perturbed(pulse, selector, eps));
    out.emplace_back(eps, reference - f);
  }
  return out;
}

Eigen::MatrixXd robustness_scan_2p(const DressedPulse& pulse, const ControlProblem& problem,
                                   const ParameterSelector& first,
                                   const ParameterSelector& second,
                                   const std::vector<double>& epsilons) {
  coefficient(pulse, first);
  coefficient(pulse, second);
  const double reference = grid_fidelity(problem, pulse);
  const auto n = static_cast<Eigen::Index>(epsilons.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double ei = epsilons[static_cast<std::size_t>(i)];
      const double ej = epsilons[static_cast<std::size_t>(j)];
      if (ei == 0.0 && ej == 0.0) {
        out(i, j) = 0.0;
        continue;
      }
      DressedPulse p = ei == 0.0 ? pulse : perturbed(pulse, first, ei);
      if (ej != 0.0) p = perturbed(p, second, ej);
      out(i, j) = reference - grid_fidelity(problem, p);
    }
  }
  return out;
}

void write_matrix_csv(std::ostream& out, const std::vector<double>& epsilons,
                      const Eigen::MatrixXd& deviations) {
  const auto old_precision = out.precision(12);
  out << "eps1\\eps2";
  for (double e : epsilons) out << ',' << e;
  out << '\n';
  for (Eigen::Index i = 0; i < deviations.rows(); ++i) {
    out << epsilons[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < deviations.cols(); ++j) out << ',' << deviations(i, j);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace dcrab
