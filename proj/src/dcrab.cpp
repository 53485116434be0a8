#include "dcrab/dcrab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "dcrab/errors.hpp"

namespace dcrab {

using nlohmann::json;

void ControlProblem::validate() const {
  if (drift.dim() != control.dim() || initial.dim() != drift.dim() ||
      target.dim() != drift.dim()) {
    throw DomainError("ControlProblem: inconsistent dimensions");
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw DomainError("ControlProblem: duration must be positive");
  }
  if (!(bound > 0.0)) throw DomainError("ControlProblem: bound must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw DomainError("ControlProblem: threshold must lie in (0, 1)");
  }
  if (harmonics < 1) throw DomainError("ControlProblem: need at least one harmonic");
  if (max_layers < 1 || max_layers > kMaxDressingLayers) {
    throw DomainError("ControlProblem: max_layers must lie in [1, " +
                      std::to_string(kMaxDressingLayers) + "]");
  }
  if (n_steps && *n_steps < 1) throw DomainError("ControlProblem: n_steps must be >= 1");
}

double ControlProblem::bandwidth() const {
  return 2.0 * std::numbers::pi * (harmonics - 0.5) / duration;
}

int ControlProblem::resolved_steps() const {
  return n_steps ? *n_steps : auto_steps(duration, bandwidth());
}

ControlProblem make_dicke_problem(int n_qubits, int excitations, double duration, int actuator,
                                  std::optional<BitString> initial_bits) {
  const SubspaceBasis basis = enumerate_subspace(n_qubits, excitations);
  const BitString bits = initial_bits.value_or(default_initial_bits(n_qubits, excitations));
  ControlProblem problem{build_heisenberg(basis), build_local_z(basis, actuator),
                         product_state(basis, bits), dicke_state(basis), duration};
  return problem;
}

double penalized_fom(double infidelity, double b_min, double b_max, double bound) {
  double fom = infidelity;
  if (b_max - bound > 0.0) fom += b_max;
  if (-bound - b_min > 0.0) fom -= b_min;
  return fom;
}

namespace {

Propagator make_propagator(const ControlProblem& problem) {
  return Propagator(problem.drift, problem.control, problem.duration, problem.resolved_steps(),
                    problem.integrator);
}

double final_infidelity(const Propagator& propagator, std::span<const double> field,
                        const ControlProblem& problem) {
  const StateVector final_state = propagator.propagate(field, problem.initial);
  return std::max(0.0, 1.0 - fidelity(final_state, problem.target));
}

}  // namespace

double infidelity(const ControlProblem& problem, const DressedPulse& pulse) {
  problem.validate();
  const Propagator propagator = make_propagator(problem);
  const std::vector<double> field =
      propagator.sample([&](double t) { return pulse.evaluate(t); });
  return final_infidelity(propagator, field, problem);
}

double figure_of_merit(const ControlProblem& problem, const DressedPulse& pulse) {
  const auto [b_min, b_max] = extrema(pulse);
  return penalized_fom(infidelity(problem, pulse), b_min, b_max, problem.bound);
}

VerifiedInfidelity verified_infidelity(const ControlProblem& problem, const DressedPulse& pulse,
                                       double convergence_tol) {
  problem.validate();
  PropagationSettings settings;
  settings.n_steps = problem.resolved_steps();
  settings.convergence_tol = convergence_tol;
  settings.integrator = Integrator::kMidpointSpectral;
  const ConvergedEvolution run =
      evolve_converged(problem.drift, problem.control, [&](double t) { return pulse.evaluate(t); },
                       problem.duration, problem.initial, settings);
  return {std::max(0.0, 1.0 - fidelity(run.final_state, problem.target)), run.n_steps,
          run.converged};
}

bool respects_bound(const DressedPulse& pulse, double bound) {
  for (int spp : {32, 256}) {
    const auto [lo, hi] = extrema(pulse, spp);
    if (hi > bound || lo < -bound) return false;
  }
  for (double t : pulse_shape_times(pulse.duration())) {
    if (std::abs(pulse.evaluate(t)) > bound) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// dCRAB

namespace {

// base + design * x. Used both inside the objective and when freezing a
// layer, so the frozen samples are bitwise identical to what was optimized.
Eigen::VectorXd superpose(const Eigen::VectorXd& base, const Eigen::MatrixXd& design,
                          std::span<const double> x) {
  const Eigen::Map<const Eigen::VectorXd> coeffs(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd out = base;
  out.noalias() += design * coeffs;
  return out;
}

struct LayerObjective {
  const ControlProblem& problem;
  const Propagator& propagator;
  const Eigen::VectorXd& base_mid;
  const Eigen::VectorXd& base_ext;
  const Eigen::MatrixXd& design_mid;
  const Eigen::MatrixXd& design_ext;

  struct Value {
    double fom;
    double infidelity;
  };

  Value evaluate(std::span<const double> x) const {
    const Eigen::VectorXd mid = superpose(base_mid, design_mid, x);
    const Eigen::VectorXd ext = superpose(base_ext, design_ext, x);
    const double infid =
        final_infidelity(propagator, std::span<const double>(mid.data(), mid.size()), problem);
    return {penalized_fom(infid, ext.minCoeff(), ext.maxCoeff(), problem.bound), infid};
  }

  double operator()(std::span<const double> x) const { return evaluate(x).fom; }
};

std::vector<double> draw_frequencies(const ControlProblem& problem, const DcrabSettings& settings,
                                     CounterRng& rng) {
  if (settings.frequency_mode == FrequencyMode::kFixedInterval) {
    return sample_frequencies_in_interval(problem.harmonics, settings.omega_min,
                                          settings.omega_max, rng);
  }
  return sample_frequencies(problem.harmonics, problem.duration, rng);
}

double grid_bandwidth(const ControlProblem& problem, const DcrabSettings& settings) {
  if (settings.frequency_mode == FrequencyMode::kFixedInterval) {
    return std::max(std::abs(settings.omega_min), std::abs(settings.omega_max));
  }
  return problem.bandwidth();
}

}  // namespace

DcrabResult dcrab_optimize(const ControlProblem& problem, const DcrabSettings& settings) {
  problem.validate();
  const auto started = std::chrono::steady_clock::now();

  ControlProblem grid_problem = problem;
  if (!grid_problem.n_steps) {
    grid_problem.n_steps = auto_steps(problem.duration, grid_bandwidth(problem, settings));
  }
  const Propagator propagator = make_propagator(grid_problem);
  const std::vector<double> ext_times =
      extrema_grid(problem.duration, grid_bandwidth(problem, settings));
  const std::span<const double> mid_times(propagator.midpoint_times());

  Eigen::VectorXd base_mid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mid_times.size()));
  Eigen::VectorXd base_ext = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ext_times.size()));

  OptimizationRecord record;
  record.seed = problem.seed;
  record.duration = problem.duration;
  record.harmonics = problem.harmonics;
  record.bound = problem.bound;
  record.threshold = problem.threshold;
  record.max_layers = problem.max_layers;
  record.n_samples = settings.search.n_samples;
  record.n_best = settings.search.n_best;
  record.coefficient_range = settings.coefficient_range;
  record.n_steps = propagator.n_steps();
  record.integrator = to_string(problem.integrator);
  record.initial_fom =
      final_infidelity(propagator, std::span<const double>(base_mid.data(), base_mid.size()),
                       problem);

  DressedPulse pulse(problem.duration, problem.max_layers);
  pulse.seed = problem.seed;

  MultistartSettings search = settings.search;
  if (settings.stop_at_threshold) search.local.stop_below = problem.threshold;
  const std::size_t dim = 2 * static_cast<std::size_t>(problem.harmonics);
  const Sampler sampler = uniform_box_sampler(settings.coefficient_range);
  const std::vector<std::vector<double>> zero_candidate{std::vector<double>(dim, 0.0)};

  double grid_infidelity = record.initial_fom;
  for (int l = 0; l < problem.max_layers; ++l) {
    const std::uint64_t layer_key = derive_seed({problem.seed, static_cast<std::uint64_t>(l)});
    CounterRng rng(layer_key);
    std::vector<double> frequencies = draw_frequencies(problem, settings, rng);
    const Eigen::MatrixXd design_mid = layer_design_matrix(frequencies, mid_times);
    const Eigen::MatrixXd design_ext = layer_design_matrix(frequencies, ext_times);
    const LayerObjective objective{problem, propagator, base_mid, base_ext, design_mid, design_ext};

    const MultistartResult best =
        multistart_search(objective, dim, search, sampler, rng, zero_candidate);

    LayerRecord layer_record;
    if (settings.stability_check) {
      CounterRng replay(layer_key);
      draw_frequencies(problem, settings, replay);
      MultistartSettings doubled = search;
      doubled.n_samples *= 2;
      layer_record.stability_fom =
          multistart_search(objective, dim, doubled, sampler, replay, zero_candidate).f;
    }

    const auto value = objective.evaluate(best.x);
    base_mid = superpose(base_mid, design_mid, best.x);
    base_ext = superpose(base_ext, design_ext, best.x);
    grid_infidelity = value.infidelity;

    FourierLayer layer{frequencies,
                       std::vector<double>(best.x.begin(), best.x.begin() + problem.harmonics),
                       std::vector<double>(best.x.begin() + problem.harmonics, best.x.end())};
    pulse = pulse.push_layer(layer);

    layer_record.frequencies = std::move(frequencies);
    layer_record.cos_coeffs = layer.cos_coeffs;
    layer_record.sin_coeffs = layer.sin_coeffs;
    layer_record.best_fom = best.f;
    layer_record.infidelity = value.infidelity;
    layer_record.evaluations = best.n_evals;
    record.evaluations += best.n_evals;
    record.layers.push_back(std::move(layer_record));

    if (grid_infidelity < problem.threshold && respects_bound(pulse, problem.bound)) {
      const VerifiedInfidelity check = verified_infidelity(grid_problem, pulse, settings.verify_tol);
      record.final_infidelity = check.infidelity;
      record.verification_steps = check.n_steps;
      if (check.infidelity < problem.threshold) {
        record.converged = true;
        break;
      }
    }
    if (settings.stall_layers > 0 && l >= settings.stall_layers) {
      const double earlier = record.layers[static_cast<std::size_t>(l - settings.stall_layers)].best_fom;
      if (best.f > (1.0 - settings.stall_tolerance) * earlier) break;
    }
  }
  if (!record.converged) {
    // Unverified: the optimization-grid value of the last layer.
    record.final_infidelity = grid_infidelity;
    record.verification_steps = 0;
  }
  record.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(pulse), std::move(record)};
}

// ---------------------------------------------------------------------------
// Records

std::string record_to_json(const OptimizationRecord& record, bool include_timing) {
  json layers = json::array();
  for (const LayerRecord& layer : record.layers) {
    json entry{{"frequencies", layer.frequencies},
               {"cos_coeffs", layer.cos_coeffs},
               {"sin_coeffs", layer.sin_coeffs},
               {"best_fom", layer.best_fom},
               {"infidelity", layer.infidelity},
               {"evaluations", layer.evaluations}};
    if (layer.stability_fom) entry["stability_fom"] = *layer.stability_fom;
    layers.push_back(std::move(entry));
  }
  json doc{{"schema", kRecordSchema},
           {"seed", record.seed},
           {"T", record.duration},
           {"harmonics", record.harmonics},
           {"bound", record.bound},
           {"threshold", record.threshold},
           {"max_layers", record.max_layers},
           {"n_samples", record.n_samples},
           {"n_best", record.n_best},
           {"coefficient_range", record.coefficient_range},
           {"n_steps", record.n_steps},
           {"integrator", record.integrator},
           {"layers", std::move(layers)},
           {"evaluations", record.evaluations},
           {"initial_fom", record.initial_fom},
           {"final_infidelity", record.final_infidelity},
           {"verification_steps", record.verification_steps},
           {"converged", record.converged}};
  if (include_timing) doc["wall_time_seconds"] = record.wall_time_seconds;
  return doc.dump(2) + "\n";
}

OptimizationRecord record_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  if (!doc.is_object() || !doc.contains("schema")) throw ParseError("/schema", "missing field");
  if (doc["schema"] != kRecordSchema) {
    throw UnsupportedVersionError("/schema", "unsupported record schema");
  }
  auto get = [&](const char* key, auto& out) {
    if (!doc.contains(key)) throw ParseError(std::string("/") + key, "missing field");
    try {
      doc.at(key).get_to(out);
    } catch (const json::exception& e) {
      throw ParseError(std::string("/") + key, e.what());
    }
  };
  OptimizationRecord r;
  get("seed", r.seed);
  get("T", r.duration);
  get("harmonics", r.harmonics);
  get("bound", r.bound);
  get("threshold", r.threshold);
  get("max_layers", r.max_layers);
  get("n_samples", r.n_samples);
  get("n_best", r.n_best);
  get("coefficient_range", r.coefficient_range);
  get("n_steps", r.n_steps);
  get("integrator", r.integrator);
  get("evaluations", r.evaluations);
  get("initial_fom", r.initial_fom);
  get("final_infidelity", r.final_infidelity);
  get("verification_steps", r.verification_steps);
  get("converged", r.converged);
  if (doc.contains("wall_time_seconds")) get("wall_time_seconds", r.wall_time_seconds);
  if (!doc.contains("layers") || !doc["layers"].is_array()) {
    throw ParseError("/layers", "expected an array");
  }
  for (std::size_t l = 0; l < doc["layers"].size(); ++l) {
    const json& entry = doc["layers"][l];
    try {
      LayerRecord layer{entry.at("frequencies").get<std::vector<double>>(),
                        entry.at("cos_coeffs").get<std::vector<double>>(),
                        entry.at("sin_coeffs").get<std::vector<double>>(),
                        entry.at("best_fom").get<double>(),
                        entry.at("infidelity").get<double>(),
                        entry.at("evaluations").get<int>(),
                        std::nullopt};
      if (entry.contains("stability_fom")) layer.stability_fom = entry["stability_fom"].get<double>();
      r.layers.push_back(std::move(layer));
    } catch (const json::exception& e) {
      throw ParseError("/layers/" + std::to_string(l), e.what());
    }
  }
  return r;
}

void write_coefficients_csv(std::ostream& out, const OptimizationRecord& record) {
  const auto old_precision = out.precision(12);
  out << "l,m,omega,c,s\n";
  for (std::size_t l = 0; l < record.layers.size(); ++l) {
    const LayerRecord& layer = record.layers[l];
    for (std::size_t m = 0; m < layer.frequencies.size(); ++m) {
      out << l << ',' << m << ',' << layer.frequencies[m] << ',' << layer.cos_coeffs[m] << ','
          << layer.sin_coeffs[m] << '\n';
    }
  }
  out.precision(old_precision);
}

// ---------------------------------------------------------------------------
// T_min sweep

namespace {

struct Probe {
  SweepPoint point;
  /// The successful run, or the lowest-infidelity failure.
  DcrabResult best;
};

class Sweeper {
 public:
  Sweeper(const ProblemFactory& factory, std::uint64_t master_seed, const SweepSettings& sweep,
          const DcrabSettings& settings)
      : factory_(factory), master_seed_(master_seed), sweep_(sweep), settings_(settings) {}

  double duration(int k) const { return sweep_.t_start + k * sweep_.t_step; }

  DcrabResult run(int k, int restart) const {
    const std::uint64_t seed = derive_seed(
        {master_seed_, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(restart)});
    ControlProblem problem = factory_(duration(k), seed);
    problem.seed = seed;
    return dcrab_optimize(problem, settings_);
  }

  Probe probe(int k) const {
    SweepPoint point{k, duration(k), std::numeric_limits<double>::infinity(), false, 0};
    std::optional<DcrabResult> best;
    for (int r = 0; r < sweep_.restarts; ++r) {
      DcrabResult attempt = run(k, r);
      ++point.restarts_used;
      const double infid = attempt.record.final_infidelity;
      const bool better = !best || infid < best->record.final_infidelity;
      point.best_infidelity = std::min(point.best_infidelity, infid);
      if (attempt.record.converged) {
        point.success = true;
        best = std::move(attempt);
        break;
      }
      if (better) best = std::move(attempt);
    }
    return {point, std::move(*best)};
  }

 private:
  const ProblemFactory& factory_;
  std::uint64_t master_seed_;
  const SweepSettings& sweep_;
  const DcrabSettings& settings_;
};

}  // namespace

TminResult tmin_sweep(const ProblemFactory& factory, std::uint64_t master_seed,
                      const SweepSettings& sweep, const DcrabSettings& settings) {
  if (!(sweep.t_start > 0.0) || !(sweep.t_step > 0.0)) {
    throw DomainError("tmin_sweep: t_start and t_step must be positive");
  }
  if (sweep.restarts < 1 || sweep.coarse_stride < 1) {
    throw DomainError("tmin_sweep: restarts and coarse_stride must be >= 1");
  }
  const Sweeper sweeper(factory, master_seed, sweep, settings);
  const int last =
      static_cast<int>(std::floor((sweep.t_cap - sweep.t_start) / sweep.t_step + 1e-9));

  TminResult result{false, std::nullopt, std::nullopt, {}, std::nullopt, std::nullopt};
  auto keep_failure = [&](Probe& probe) {
    if (!result.best || probe.best.record.final_infidelity < result.best->record.final_infidelity) {
      result.best = std::move(probe.best);
    }
  };

  int previous_coarse = -1;
  for (int k = 0; k <= last && !result.converged; k += sweep.coarse_stride) {
    Probe coarse = sweeper.probe(k);
    result.points.push_back(coarse.point);
    if (!coarse.point.success) {
      keep_failure(coarse);
      previous_coarse = k;
      continue;
    }
    result.converged = true;
    result.t_index = k;
    result.best = std::move(coarse.best);
    for (int j = previous_coarse + 1; j < k; ++j) {
      Probe fine = sweeper.probe(j);
      result.points.push_back(fine.point);
      if (fine.point.success) {
        result.t_index = j;
        result.best = std::move(fine.best);
        break;
      }
    }
  }

  std::sort(result.points.begin(), result.points.end(),
            [](const SweepPoint& a, const SweepPoint& b) { return a.index < b.index; });
  if (result.converged) {
    result.t_min = sweeper.duration(*result.t_index);
    if (sweep.persistence_check) {
      result.persistence_infidelity =
          sweeper.run(*result.t_index + 5, 0).record.final_infidelity;
    }
  }
  return result;
}

}  // namespace dcrab
