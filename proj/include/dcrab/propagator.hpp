#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "dcrab/subspace.hpp"

namespace dcrab {

enum class Integrator {
  /// exp(-i (H0 + B(t_k + dt/2) Hc) dt) per step, each exponential by
  /// spectral decomposition.
  kMidpointSpectral,
  /// exp(-i H0 dt/2) exp(-i B(t_k + dt/2) Hc dt) exp(-i H0 dt/2). Needs a
  /// diagonal control operator; same order as the midpoint rule but with no
  /// eigensolve inside the time loop.
  kStrangSplit,
};

const char* to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct PropagationSettings {
  int n_steps = 1000;
  /// Step doubling in evolve_converged stops once ||psi_n - psi_2n|| falls below this.
  double convergence_tol = 1e-9;
  int record_stride = 1;
  Integrator integrator = Integrator::kMidpointSpectral;

  void validate() const;
};

struct FidelityTrace {
  std::vector<double> times;
  std::vector<double> values;
};

/// Header `t,fidelity`, 12 significant digits.
void write_trace_csv(std::ostream& out, const FidelityTrace& trace);

/// exp(-i H dt) by eigendecomposition of H.
Eigen::MatrixXcd step_unitary(const HermitianOperator& h, double dt);

/// ceil(max(1000, 40 * T * bandwidth / 2pi)): 40 grid points per period of
/// the fastest pulse component, never fewer than 1000 steps.
int auto_steps(double duration, double bandwidth);

/// Fixed drift/control pair on a uniform grid of `n_steps` steps over
/// [0, duration]. The field is supplied as its values at the step midpoints,
/// so callers can sample pulses however is cheapest for them.
class Propagator {
 public:
  Propagator(const HermitianOperator& drift, const HermitianOperator& control, double duration,
             int n_steps, Integrator integrator = Integrator::kMidpointSpectral);

  double duration() const { return duration_; }
  int n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  Integrator integrator() const { return integrator_; }
  /// t_k + dt/2 for k = 0..n_steps-1.
  const std::vector<double>& midpoint_times() const { return midpoints_; }

  /// Throws FieldError on non-finite samples and IntegrationError when the
  /// norm drifts by more than 1e-8.
  StateVector propagate(std::span<const double> midpoint_field, const StateVector& psi0) const;

  /// Same, recording |<psi(t)|target>|^2 at t = 0 and after every
  /// `record_stride` steps (the final time is always recorded).
  StateVector propagate(std::span<const double> midpoint_field, const StateVector& psi0,
                        const StateVector& target, int record_stride,
                        FidelityTrace& trace) const;

  std::vector<double> sample(const std::function<double(double)>& field) const;

 private:
  void check_inputs(std::span<const double> field, const StateVector& psi0) const;
  void apply_step(double b, Eigen::VectorXcd& psi) const;

  double duration_;
  int n_steps_;
  double dt_;
  Integrator integrator_;
  std::vector<double> midpoints_;

  Eigen::MatrixXcd drift_;
  Eigen::MatrixXcd control_;
  bool real_ = false;
  Eigen::MatrixXd drift_real_;
  Eigen::MatrixXd control_real_;
  // Strang splitting.
  Eigen::VectorXd control_diagonal_;
  Eigen::MatrixXcd drift_half_;
  Eigen::MatrixXcd drift_full_;
};

struct EvolutionResult {
  StateVector final_state;
  std::optional<FidelityTrace> trace;
};

/// Integrates i d/dt psi = (H0 + B(t) Hc) psi on [0, T]. A fidelity trace is
/// recorded when `target` is given.
EvolutionResult evolve(const HermitianOperator& drift, const HermitianOperator& control,
                       const std::function<double(double)>& field, double duration,
                       const StateVector& psi0, const PropagationSettings& settings,
                       const StateVector* target = nullptr);

struct ConvergedEvolution {
  StateVector final_state;
  int n_steps;
  /// ||psi_n - psi_2n|| of the last doubling.
  double last_change;
  bool converged;
};

/// Repeats evolve with n_steps, 2 n_steps, ... until two consecutive final
/// states differ by less than settings.convergence_tol, or `max_steps` would
/// be exceeded.
ConvergedEvolution evolve_converged(const HermitianOperator& drift,
                                    const HermitianOperator& control,
                                    const std::function<double(double)>& field, double duration,
                                    const StateVector& psi0, const PropagationSettings& settings,
                                    int max_steps = 1 << 22);

}  // namespace dcrab
