#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dcrab/multistart.hpp"
#include "dcrab/propagator.hpp"
#include "dcrab/pulses.hpp"
#include "dcrab/subspace.hpp"

namespace dcrab {

inline constexpr double kDefaultFieldBound = 4.0 * std::numbers::pi;
inline constexpr double kDefaultThreshold = 1e-3;
inline constexpr const char* kRecordSchema = "dcrab-record/1";

/// State-to-state transfer psi0 -> target under H0 + B(t) Hc on [0, T].
struct ControlProblem {
  HermitianOperator drift;
  HermitianOperator control;
  StateVector initial;
  StateVector target;
  double duration;
  double bound = kDefaultFieldBound;
  int harmonics = kDefaultHarmonics;
  double threshold = kDefaultThreshold;
  int max_layers = kMaxDressingLayers;
  std::uint64_t seed = 0;
  /// Steps of the optimization grid; auto_steps(T, max possible |w|) when unset.
  std::optional<int> n_steps{};
  Integrator integrator = Integrator::kStrangSplit;

  void validate() const;
  /// Largest frequency any layer can draw: 2 pi (M - 1/2) / T.
  double bandwidth() const;
  int resolved_steps() const;
};

/// Isotropic chain, Z control on `actuator`, product initial state, Dicke target.
ControlProblem make_dicke_problem(int n_qubits, int excitations, double duration,
                                  int actuator = 1,
                                  std::optional<BitString> initial_bits = std::nullopt);

/// (1 - F_T) + [B_max > bound] B_max - [B_min < -bound] B_min.
double penalized_fom(double infidelity, double b_min, double b_max, double bound);

/// Figure of merit of `pulse` on the problem's propagation grid, extrema on
/// the default 32-samples-per-period grid.
double figure_of_merit(const ControlProblem& problem, const DressedPulse& pulse);

/// Final-time infidelity on the problem's propagation grid.
double infidelity(const ControlProblem& problem, const DressedPulse& pulse);

struct VerifiedInfidelity {
  double infidelity;
  int n_steps;
  bool converged;
};

/// Infidelity from step-doubled midpoint propagation (evolve_converged),
/// independent of the optimization grid.
VerifiedInfidelity verified_infidelity(const ControlProblem& problem, const DressedPulse& pulse,
                                       double convergence_tol = 1e-9);

/// Bound check used for the convergence decision: the default extrema grid,
/// a 256-samples-per-period grid and the exported 2048-point shape grid.
bool respects_bound(const DressedPulse& pulse, double bound);

enum class FrequencyMode { kRandomizedHarmonics, kFixedInterval };

struct DcrabSettings {
  MultistartSettings search;
  /// Multistart coefficients are drawn uniformly from [-range, range].
  double coefficient_range = 2.0;
  FrequencyMode frequency_mode = FrequencyMode::kRandomizedHarmonics;
  double omega_min = 0.0;
  double omega_max = 0.0;
  /// Let each local search stop once the FoM is below the problem threshold.
  bool stop_at_threshold = false;
  /// Re-run every layer's search with twice the samples and record both results.
  bool stability_check = false;
  /// Stop dressing once the best FoM has improved by less than a relative
  /// `stall_tolerance` over the last `stall_layers` layers. 0 disables.
  int stall_layers = 0;
  double stall_tolerance = 0.01;
  /// Tolerance of the step-doubling verification.
  double verify_tol = 1e-9;
};

struct LayerRecord {
  std::vector<double> frequencies;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;
  double best_fom;
  /// Optimization-grid infidelity after this layer.
  double infidelity;
  int evaluations;
  std::optional<double> stability_fom;
};

struct OptimizationRecord {
  std::uint64_t seed = 0;
  double duration = 0.0;
  int harmonics = 0;
  double bound = 0.0;
  double threshold = 0.0;
  int max_layers = 0;
  int n_samples = 0;
  int n_best = 0;
  double coefficient_range = 0.0;
  int n_steps = 0;
  std::string integrator;
  std::vector<LayerRecord> layers;
  int evaluations = 0;
  double initial_fom = 0.0;
  double final_infidelity = 1.0;
  int verification_steps = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
};

std::string record_to_json(const OptimizationRecord& record, bool include_timing = true);
OptimizationRecord record_from_json(const std::string& text);

/// `l,m,omega,c,s`, one row per harmonic of every layer.
void write_coefficients_csv(std::ostream& out, const OptimizationRecord& record);

struct DcrabResult {
  DressedPulse pulse;
  OptimizationRecord record;
};

/// Dressed CRAB: for each layer, draw fresh frequencies, run a multistart
/// Nelder-Mead search over that layer's 2M coefficients with earlier layers
/// frozen, append the layer, and stop once the verified infidelity is below
/// the threshold and the pulse stays within the bound.
DcrabResult dcrab_optimize(const ControlProblem& problem, const DcrabSettings& settings = {});

struct SweepSettings {
  double t_start = 0.1;
  double t_step = 0.1;
  double t_cap = 20.0;
  int restarts = 3;
  /// When > 1, first scan the grid every `coarse_stride` points and then
  /// rescan the points between the last coarse failure and the first coarse
  /// success. All probed durations stay on the t_start + k t_step grid.
  int coarse_stride = 1;
  /// After success, also optimize at T_min + 5 t_step and record the result.
  bool persistence_check = false;
};

struct SweepPoint {
  int index;
  double duration;
  double best_infidelity;
  bool success;
  int restarts_used;
};

struct TminResult {
  bool converged;
  std::optional<double> t_min;
  std::optional<int> t_index;
  std::vector<SweepPoint> points;
  /// Successful run at T_min, or the lowest-infidelity run if none succeeded.
  std::optional<DcrabResult> best;
  std::optional<double> persistence_infidelity;
};

/// Template for a sweep: builds the problem for a given duration and seed.
using ProblemFactory = std::function<ControlProblem(double duration, std::uint64_t seed)>;

/// Scans T = t_start + k t_step upwards; at each T runs dcrab_optimize up to
/// `restarts` times with seeds derive_seed({master_seed, k, r}). The first T
/// whose verified infidelity is below the threshold is T_min.
TminResult tmin_sweep(const ProblemFactory& factory, std::uint64_t master_seed,
                      const SweepSettings& sweep, const DcrabSettings& settings = {});

}  // namespace dcrab
