#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcrab/controllability.hpp"
#include "dcrab/dcrab.hpp"
#include "dcrab/errors.hpp"
#include "dcrab/experiments.hpp"

namespace fs = std::filesystem;
using namespace dcrab;

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> config;
  std::optional<int> threads;
};

struct KnobFlags {
  std::optional<int> harmonics, max_layers, restarts, n_samples, n_best, evals_per_dimension;
  std::optional<int> stall_layers, coarse_stride, actuator;
  std::optional<double> threshold, bound, coefficient_range, t_start, t_step, t_cap;
  std::optional<std::string> integrator;
  bool stop_at_threshold = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--config", f.config, "TOML configuration file")->check(CLI::ExistingFile);
  app->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void add_knobs(CLI::App* app, KnobFlags& k) {
  app->add_option("--harmonics", k.harmonics, "Harmonics per layer (M)");
  app->add_option("--max-layers", k.max_layers, "Maximum dressing layers");
  app->add_option("--threshold", k.threshold, "Infidelity threshold");
  app->add_option("--bound", k.bound, "Field bound |B| <= bound");
  app->add_option("--restarts", k.restarts, "Optimizations per duration");
  app->add_option("--samples", k.n_samples, "Multistart candidates");
  app->add_option("--best", k.n_best, "Candidates refined by Nelder-Mead");
  app->add_option("--coefficient-range", k.coefficient_range, "Candidate coefficient range");
  app->add_option("--evals-per-dim", k.evals_per_dimension, "Nelder-Mead budget per parameter");
  app->add_option("--stall-layers", k.stall_layers, "Stop dressing after this many idle layers");
  app->add_option("--integrator", k.integrator, "split or midpoint");
  app->add_option("--actuator", k.actuator, "Controlled qubit");
  app->add_option("--t-start", k.t_start, "First duration of a sweep");
  app->add_option("--t-step", k.t_step, "Duration step of a sweep");
  app->add_option("--t-cap", k.t_cap, "Last duration of a sweep");
  app->add_option("--coarse-stride", k.coarse_stride, "Coarse sweep stride");
  app->add_flag("--stop-at-threshold", k.stop_at_threshold,
                "End local searches once below the threshold");
}

template <typename T, typename U>
void apply(const std::optional<T>& flag, U& target) {
  if (flag) target = *flag;
}

ExperimentConfig resolve_config(const CommonFlags& common, const KnobFlags& knobs) {
  ExperimentConfig c =
      common.config ? load_config(*common.config) : ExperimentConfig::paper_defaults();
  apply(common.seed, c.seed);
  if (common.out) c.output_dir = *common.out;
  apply(common.threads, c.threads);
  apply(knobs.harmonics, c.harmonics);
  apply(knobs.max_layers, c.max_layers);
  apply(knobs.threshold, c.threshold);
  apply(knobs.bound, c.bound);
  apply(knobs.restarts, c.restarts);
  apply(knobs.n_samples, c.n_samples);
  apply(knobs.n_best, c.n_best);
  apply(knobs.coefficient_range, c.coefficient_range);
  apply(knobs.evals_per_dimension, c.evals_per_dimension);
  apply(knobs.stall_layers, c.stall_layers);
  apply(knobs.actuator, c.actuator);
  apply(knobs.t_start, c.t_start);
  apply(knobs.t_step, c.t_step);
  apply(knobs.t_cap, c.t_cap);
  apply(knobs.coarse_stride, c.coarse_stride);
  if (knobs.integrator) c.integrator = integrator_from_string(*knobs.integrator);
  if (knobs.stop_at_threshold) c.stop_at_threshold = true;
  return c;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out);
}

TargetSpec checked_target(int n, int a) {
  if (a < 1 || a > n - 1) {
    throw DomainError("target a = " + std::to_string(a) + " is a product state for N = " +
                      std::to_string(n) + "; choose 1 <= a <= N-1");
  }
  return {n, a};
}

ParameterSelector parse_selector(const std::string& text) {
  // kind:layer:harmonic, e.g. c:0:3
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ':');) parts.push_back(part);
  if (parts.size() != 3 || (parts[0] != "c" && parts[0] != "s")) {
    throw DomainError("parameter '" + text + "': expected c:LAYER:HARMONIC or s:LAYER:HARMONIC");
  }
  return {std::stoul(parts[1]), std::stoul(parts[2]),
          parts[0] == "c" ? CoefficientKind::kCos : CoefficientKind::kSin};
}

FidelityTrace trace_of(const ControlProblem& problem, const DressedPulse& pulse, int n_steps,
                       Integrator integrator) {
  PropagationSettings settings;
  settings.n_steps = n_steps;
  settings.integrator = integrator;
  settings.record_stride = std::max(1, n_steps / 2000);
  return *evolve(problem.drift, problem.control, [&](double t) { return pulse.evaluate(t); },
                 problem.duration, problem.initial, settings, &problem.target)
              .trace;
}

void print_warnings(const ExperimentConfig& config) {
  for (const std::string& w : config.warnings()) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dicke-state preparation by dCRAB optimal control"};
  app.require_subcommand(1);
  std::cout.precision(12);

  // basis
  int basis_n = 0, basis_a = 0;
  CLI::App* basis = app.add_subcommand("basis", "List the weight-a basis states (qubit 1 first)");
  basis->add_option("-N,--qubits", basis_n, "Number of qubits")->required();
  basis->add_option("-a,--excitations", basis_a, "Excitation number")->required();

  // simulate
  CommonFlags sim_common;
  KnobFlags sim_knobs;
  int sim_n = 0, sim_a = 0;
  std::string sim_pulse;
  std::optional<int> sim_steps;
  bool sim_converged = false;
  CLI::App* simulate = app.add_subcommand("simulate", "Propagate a stored pulse");
  simulate->add_option("-N,--qubits", sim_n, "Number of qubits")->required();
  simulate->add_option("-a,--excitations", sim_a, "Excitation number")->required();
  simulate->add_option("--pulse", sim_pulse, "Pulse JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--steps", sim_steps, "Time steps (default: automatic)");
  simulate->add_flag("--converged", sim_converged, "Double the steps until the state converges");
  add_common(simulate, sim_common);
  add_knobs(simulate, sim_knobs);

  // optimize
  CommonFlags opt_common;
  KnobFlags opt_knobs;
  int opt_n = 0, opt_a = 0;
  double opt_t = 0.0;
  CLI::App* optimize = app.add_subcommand("optimize", "One dCRAB optimization at fixed T");
  optimize->add_option("-N,--qubits", opt_n, "Number of qubits")->required();
  optimize->add_option("-a,--excitations", opt_a, "Excitation number")->required();
  optimize->add_option("-T,--duration", opt_t, "Pulse duration (1/J)")->required();
  add_common(optimize, opt_common);
  add_knobs(optimize, opt_knobs);

  // tmin
  CommonFlags tmin_common;
  KnobFlags tmin_knobs;
  int tmin_n = 0, tmin_a = 0;
  CLI::App* tmin = app.add_subcommand("tmin", "Sweep T upwards to find T_min for one target");
  tmin->add_option("-N,--qubits", tmin_n, "Number of qubits")->required();
  tmin->add_option("-a,--excitations", tmin_a, "Excitation number")->required();
  add_common(tmin, tmin_common);
  add_knobs(tmin, tmin_knobs);

  // campaign
  CommonFlags camp_common;
  KnobFlags camp_knobs;
  CLI::App* campaign = app.add_subcommand("campaign", "T_min sweeps for every configured target");
  add_common(campaign, camp_common);
  add_knobs(campaign, camp_knobs);

  // fit
  std::string fit_dir;
  int fit_a = 1;
  CLI::App* fit = app.add_subcommand("fit", "Power-law fit of T_min(N) from a campaign directory");
  fit->add_option("dir", fit_dir, "Campaign output directory")->required();
  fit->add_option("-a,--excitations", fit_a, "Excitation number to fit");

  // robustness
  CommonFlags rob_common;
  KnobFlags rob_knobs;
  int rob_n = 0, rob_a = 0;
  std::string rob_pulse, rob_first;
  std::optional<std::string> rob_second;
  std::vector<double> rob_eps;
  CLI::App* robustness = app.add_subcommand("robustness", "Fidelity deviation under coefficient errors");
  robustness->add_option("-N,--qubits", rob_n, "Number of qubits")->required();
  robustness->add_option("-a,--excitations", rob_a, "Excitation number")->required();
  robustness->add_option("--pulse", rob_pulse, "Pulse JSON")->required()->check(CLI::ExistingFile);
  robustness->add_option("--param", rob_first, "Coefficient c:LAYER:HARMONIC or s:LAYER:HARMONIC")
      ->required();
  robustness->add_option("--param2", rob_second, "Second coefficient for a 2-D scan");
  robustness->add_option("--eps", rob_eps, "Relative errors (default 0, +-1..5%)")->delimiter(',');
  add_common(robustness, rob_common);
  add_knobs(robustness, rob_knobs);

  // dla
  std::optional<int> dla_n, dla_a;
  int dla_max = 5, dla_actuator = 1;
  bool dla_xx = false;
  CLI::App* dla = app.add_subcommand("dla", "Subspace controllability verdicts");
  dla->add_option("-N,--qubits", dla_n, "Only this N");
  dla->add_option("-a,--excitations", dla_a, "Only this a (needs -N)");
  dla->add_option("--max-qubits", dla_max, "All N = 2..max, a = 1..N-1");
  dla->add_option("--actuator", dla_actuator, "Controlled qubit");
  dla->add_flag("--xx", dla_xx, "Drop the ZZ coupling (XX chain)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*basis) {
      const SubspaceBasis b = enumerate_subspace(basis_n, basis_a);
      std::cout << "index,state\n";
      for (std::size_t i = 0; i < b.dim(); ++i) {
        std::string bits;
        for (int q = 1; q <= basis_n; ++q) bits += (b.states()[i] & qubit_mask(q)) ? '1' : '0';
        std::cout << i << ',' << bits << '\n';
      }
      return 0;
    }

    if (*simulate) {
      const ExperimentConfig config = resolve_config(sim_common, sim_knobs);
      const DressedPulse pulse = pulse_from_json(read_file(sim_pulse));
      const ControlProblem problem =
          config.problem(checked_target(sim_n, sim_a), pulse.duration());
      const Integrator integrator =
          sim_knobs.integrator ? config.integrator : Integrator::kMidpointSpectral;
      int steps = sim_steps.value_or(auto_steps(pulse.duration(), pulse.max_abs_frequency()));
      double fid = 0.0;
      if (sim_converged) {
        PropagationSettings s;
        s.n_steps = steps;
        s.integrator = integrator;
        const ConvergedEvolution ev =
            evolve_converged(problem.drift, problem.control,
                             [&](double t) { return pulse.evaluate(t); }, problem.duration,
                             problem.initial, s);
        steps = ev.n_steps;
        fid = fidelity(ev.final_state, problem.target);
        if (!ev.converged) std::cerr << "warning: step doubling did not converge\n";
      }
      const FidelityTrace trace = trace_of(problem, pulse, steps, integrator);
      if (!sim_converged) fid = trace.values.back();
      if (sim_common.out) {
        fs::create_directories(*sim_common.out);
        write_csv(fs::path(*sim_common.out) / "trace.csv",
                  [&](std::ostream& out) { write_trace_csv(out, trace); });
      }
      std::cout << "fidelity," << fid << "\ninfidelity," << 1.0 - fid << "\nsteps," << steps
                << '\n';
      return 0;
    }

    if (*optimize) {
      ExperimentConfig config = resolve_config(opt_common, opt_knobs);
      const TargetSpec target = checked_target(opt_n, opt_a);
      config.targets = {target};
      config.validate();
      print_warnings(config);
      ControlProblem problem = config.problem(target, opt_t);
      problem.seed = config.target_seed(target);
      DcrabSettings settings = config.dcrab_settings();
      settings.search.threads = config.threads;
      const DcrabResult result = dcrab_optimize(problem, settings);

      const fs::path dir = config.output_dir;
      fs::create_directories(dir);
      write_file(dir / "config.json", config_to_json(config));
      write_file(dir / "record.json", record_to_json(result.record));
      write_file(dir / "pulse.json", pulse_to_json(result.pulse));
      write_csv(dir / "coefficients.csv",
                [&](std::ostream& out) { write_coefficients_csv(out, result.record); });
      write_csv(dir / "pulse_shape.csv",
                [&](std::ostream& out) { write_pulse_shape_csv(out, result.pulse); });
      const int steps = std::max(result.record.verification_steps, result.record.n_steps);
      write_csv(dir / "trace.csv", [&](std::ostream& out) {
        write_trace_csv(out, trace_of(problem, result.pulse, steps, Integrator::kMidpointSpectral));
      });
      std::cout << "converged," << (result.record.converged ? "true" : "false")
                << "\ninfidelity," << result.record.final_infidelity << "\nlayers,"
                << result.record.layers.size() << "\nevaluations," << result.record.evaluations
                << "\nseed," << result.record.seed << '\n';
      return result.record.converged ? 0 : 3;
    }

    if (*tmin || *campaign) {
      ExperimentConfig config = *tmin ? resolve_config(tmin_common, tmin_knobs)
                                      : resolve_config(camp_common, camp_knobs);
      if (*tmin) config.targets = {checked_target(tmin_n, tmin_a)};
      config.validate();
      print_warnings(config);
      const CampaignSummary summary = run_campaign(config);
      for (const TargetSpec& t : summary.skipped) {
        std::cerr << "skipped N=" << t.n_qubits << " a=" << t.excitations
                  << " (already in manifest)\n";
      }
      write_summary_csv(std::cout, summary.rows);
      return 0;
    }

    if (*fit) {
      const std::vector<CampaignRow> rows = read_manifest(fit_dir);
      const ScalingFit f = fit_power_law(scaling_points(rows, fit_a));
      std::cout << "N,T_min\n";
      for (const auto& [n, t] : f.points) std::cout << n << ',' << t << '\n';
      std::cout << "prefactor," << f.prefactor << "\nexponent," << f.exponent << "\nresidual,"
                << f.residual << '\n';
      return 0;
    }

    if (*robustness) {
      const ExperimentConfig config = resolve_config(rob_common, rob_knobs);
      const DressedPulse pulse = pulse_from_json(read_file(rob_pulse));
      ControlProblem problem = config.problem(checked_target(rob_n, rob_a), pulse.duration());
      const std::vector<double> eps = rob_eps.empty() ? default_epsilons() : rob_eps;
      const ParameterSelector first = parse_selector(rob_first);
      std::ostream* out = &std::cout;
      std::ofstream file;
      if (rob_common.out) {
        fs::create_directories(*rob_common.out);
        file.open(fs::path(*rob_common.out) / (rob_second ? "robustness_2p.csv" : "robustness_1p.csv"));
        out = &file;
      }
      out->precision(12);
      if (rob_second) {
        write_matrix_csv(*out, eps,
                         robustness_scan_2p(pulse, problem, first, parse_selector(*rob_second), eps));
      } else {
        *out << "eps,deviation\n";
        for (const auto& [e, d] : robustness_scan_1p(pulse, problem, first, eps)) {
          *out << e << ',' << d << '\n';
        }
      }
      return 0;
    }

    if (*dla) {
      std::vector<ControllabilityVerdict> verdicts;
      const double anisotropy = dla_xx ? 0.0 : 1.0;
      if (dla_n) {
        if (dla_a) {
          verdicts.push_back(
              verify_subspace_controllability(*dla_n, *dla_a, dla_actuator, anisotropy));
        } else {
          for (int a = 1; a < *dla_n; ++a) {
            verdicts.push_back(verify_subspace_controllability(*dla_n, a, dla_actuator, anisotropy));
          }
        }
      } else {
        for (int n = 2; n <= dla_max; ++n) {
          for (int a = 1; a < n; ++a) {
            verdicts.push_back(verify_subspace_controllability(n, a, dla_actuator, anisotropy));
          }
        }
      }
      write_verdict_csv(std::cout, verdicts);
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.where() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
