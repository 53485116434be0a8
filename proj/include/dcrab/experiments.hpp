#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dcrab/dcrab.hpp"

namespace dcrab {

struct TargetSpec {
  int n_qubits;
  int excitations;
  friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
};

/// Everything a campaign needs; loadable from TOML, always embedded in the
/// outputs as JSON.
struct ExperimentConfig {
  std::vector<TargetSpec> targets;
  /// Targets with a > 2 are refused unless this is set.
  bool allow_high_excitation = false;
  int actuator = 1;
  /// Initial product state; default |1..1 0..0>.
  std::optional<BitString> initial_bits;

  int harmonics = kDefaultHarmonics;
  int max_layers = kMaxDressingLayers;
  double threshold = kDefaultThreshold;
  double bound = kDefaultFieldBound;
  std::uint64_t seed = 1;
  int restarts = 3;
  int n_samples = 1000;
  int n_best = 20;
  double coefficient_range = 2.0;
  int evals_per_dimension = 400;
  bool stop_at_threshold = false;
  /// See DcrabSettings::stall_layers; 0 runs every layer.
  int stall_layers = 0;
  double stall_tolerance = 0.01;
  Integrator integrator = Integrator::kStrangSplit;

  double t_start = 0.1;
  double t_step = 0.1;
  double t_cap = 20.0;
  int coarse_stride = 1;

  std::filesystem::path output_dir = "campaign-out";
  int threads = 1;

  /// W states N = 3..9 and a = 2 Dicke states N = 4..9.
  static ExperimentConfig paper_defaults();

  /// Throws DomainError describing the first knob outside its range.
  void validate() const;
  /// Warnings for targets that are legal but expensive.
  std::vector<std::string> warnings() const;

  DcrabSettings dcrab_settings() const;
  SweepSettings sweep_settings() const;
  ControlProblem problem(const TargetSpec& target, double duration) const;
  /// Master seed of one target's sweep: derive_seed({seed, N, a}).
  std::uint64_t target_seed(const TargetSpec& target) const;
};

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

/// TOML layout:
///   [targets] w = [3, 4]   dicke2 = [4]   extra = [[6, 3]]   allow_high_excitation
///   [system] actuator, initial_bits
///   [optimizer] harmonics, max_layers, threshold, bound, seed, restarts,
///               n_samples, n_best, coefficient_range, evals_per_dimension,
///               stop_at_threshold, stall_layers, stall_tolerance, integrator
///   [sweep] t_start, t_step, t_cap, coarse_stride
///   output_dir, threads
/// Keys that are absent keep the paper_defaults() value (targets excepted:
/// a [targets] table replaces the default list).
ExperimentConfig config_from_toml(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

struct ScalingFit {
  std::vector<std::pair<double, double>> points;
  double prefactor;
  double exponent;
  /// RMS of the log residuals.
  double residual;
};

/// Least squares line through (ln N, ln T_min).
ScalingFit fit_power_law(const std::vector<std::pair<double, double>>& points);

enum class CoefficientKind { kCos, kSin };

struct ParameterSelector {
  std::size_t layer;
  std::size_t harmonic;
  CoefficientKind kind;
};

std::string to_string(const ParameterSelector& selector);

/// Default relative error grid: 0, +-1%, ..., +-5%.
std::vector<double> default_epsilons();

/// Propagation used by robustness scans: the problem's optimization grid.
/// Deviation is F* - F(eps), where F* is the unperturbed fidelity on the same grid.
std::vector<std::pair<double, double>> robustness_scan_1p(const DressedPulse& pulse,
                                                          const ControlProblem& problem,
                                                          const ParameterSelector& selector,
                                                          const std::vector<double>& epsilons);

/// Rows follow `first`'s epsilons, columns `second`'s.
Eigen::MatrixXd robustness_scan_2p(const DressedPulse& pulse, const ControlProblem& problem,
                                   const ParameterSelector& first,
                                   const ParameterSelector& second,
                                   const std::vector<double>& epsilons);

void write_matrix_csv(std::ostream& out, const std::vector<double>& epsilons,
                      const Eigen::MatrixXd& deviations);

struct CampaignRow {
  TargetSpec target;
  std::optional<double> t_min;
  double infidelity;
  std::uint64_t seed;
  bool converged;
};

struct CampaignSummary {
  std::filesystem::path directory;
  std::vector<CampaignRow> rows;
  std::vector<TargetSpec> skipped;
};

/// Runs tmin_sweep for every target not yet listed in the manifest and
/// writes, per target, runs/N<N>_a<a>/{record.json, pulse.json, trace.csv,
/// pulse_shape.csv, coefficients.csv, sweep.csv}; then rewrites summary.csv
/// (`N,a,T_min,infidelity,seed`) from the manifest.
CampaignSummary run_campaign(const ExperimentConfig& config);

/// Reads the manifest of an output directory; throws ParseError when it is corrupt.
std::vector<CampaignRow> read_manifest(const std::filesystem::path& directory);

void write_summary_csv(std::ostream& out, const std::vector<CampaignRow>& rows);

/// `N,T_min` points of the converged rows with excitation number a.
std::vector<std::pair<double, double>> scaling_points(const std::vector<CampaignRow>& rows,
                                                      int excitations);

}  // namespace dcrab
