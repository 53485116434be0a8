#include "dcrab/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "dcrab/errors.hpp"

namespace dcrab {

const char* to_string(Integrator integrator) {
  switch (integrator) {
    case Integrator::kMidpointSpectral:
      return "midpoint";
    case Integrator::kStrangSplit:
      return "split";
  }
  return "?";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "midpoint") return Integrator::kMidpointSpectral;
  if (name == "split") return Integrator::kStrangSplit;
  throw DomainError("unknown integrator '" + name + "' (expected midpoint or split)");
}

void PropagationSettings::validate() const {
  if (n_steps < 1) throw DomainError("PropagationSettings: n_steps must be >= 1");
  if (!(convergence_tol > 0.0)) throw DomainError("PropagationSettings: convergence_tol must be > 0");
  if (record_stride < 1) throw DomainError("PropagationSettings: record_stride must be >= 1");
}

void write_trace_csv(std::ostream& out, const FidelityTrace& trace) {
  const auto old_precision = out.precision(12);
  out << "t,fidelity\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    out << trace.times[i] << ',' << trace.values[i] << '\n';
  }
  out.precision(old_precision);
}

Eigen::MatrixXcd step_unitary(const HermitianOperator& h, double dt) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("step_unitary: eigensolver did not converge");
  }
  const Eigen::VectorXd& energies = solver.eigenvalues();
  Eigen::VectorXcd phases(energies.size());
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    phases(i) = std::polar(1.0, -energies(i) * dt);
  }
  const Eigen::MatrixXcd& v = solver.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

int auto_steps(double duration, double bandwidth) {
  constexpr double kFloor = 1000.0;
  constexpr double kSamplesPerPeriod = 40.0;
  const double wanted = kSamplesPerPeriod * duration * std::max(bandwidth, 0.0) /
                        (2.0 * std::numbers::pi);
  return static_cast<int>(std::ceil(std::max(kFloor, wanted)));
}

Propagator::Propagator(const HermitianOperator& drift, const HermitianOperator& control,
                       double duration, int n_steps, Integrator integrator)
    : duration_(duration),
      n_steps_(n_steps),
      dt_(duration / n_steps),
      integrator_(integrator),
      drift_(drift.matrix()),
      control_(control.matrix()) {
  if (drift.dim() != control.dim()) {
    throw DomainError("Propagator: drift and control dimensions differ");
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw DomainError("Propagator: duration must be positive");
  }
  if (n_steps < 1) {
    throw DomainError("Propagator: n_steps must be >= 1");
  }
  midpoints_.resize(static_cast<std::size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k) {
    midpoints_[static_cast<std::size_t>(k)] = (k + 0.5) * dt_;
  }
  real_ = drift.is_real() && control.is_real();
  if (real_) {
    drift_real_ = drift_.real();
    control_real_ = control_.real();
  }
  if (integrator_ == Integrator::kStrangSplit) {
    if (!control.is_diagonal()) {
      throw DomainError("Propagator: split-operator integration needs a diagonal control");
    }
    control_diagonal_ = control_.diagonal().real();
    drift_half_ = step_unitary(drift, 0.5 * dt_);
    drift_full_ = drift_half_ * drift_half_;
  }
}

std::vector<double> Propagator::sample(const std::function<double(double)>& field) const {
  std::vector<double> out(midpoints_.size());
  std::transform(midpoints_.begin(), midpoints_.end(), out.begin(), field);
  return out;
}

void Propagator::check_inputs(std::span<const double> field, const StateVector& psi0) const {
  if (psi0.dim() != drift_.rows()) {
    throw DomainError("Propagator: state dimension " + std::to_string(psi0.dim()) +
                      " does not match operator dimension " + std::to_string(drift_.rows()));
  }
  if (field.size() != midpoints_.size()) {
    throw DomainError("Propagator: expected " + std::to_string(midpoints_.size()) +
                      " field samples, got " + std::to_string(field.size()));
  }
  for (std::size_t k = 0; k < field.size(); ++k) {
    if (!std::isfinite(field[k])) {
      throw FieldError("non-finite control field at t = " + std::to_string(midpoints_[k]));
    }
  }
}

namespace {

// Scratch space for one propagation; Propagator itself stays immutable so
// that a single instance can be shared by concurrent objective evaluations.
struct Workspace {
  explicit Workspace(Eigen::Index dim)
      : hamiltonian(dim, dim), re(dim), im(dim), tmp_re(dim), tmp_im(dim), solver(dim) {}
  Eigen::MatrixXd hamiltonian;
  Eigen::VectorXd re, im, tmp_re, tmp_im;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> complex_solver;
};

void apply_spectral_real(Workspace& ws, double dt, Eigen::VectorXcd& psi) {
  if (ws.solver.info() != Eigen::Success) {
    throw NumericalError("midpoint step: eigensolver did not converge");
  }
  const Eigen::MatrixXd& v = ws.solver.eigenvectors();
  const Eigen::VectorXd& energies = ws.solver.eigenvalues();
  ws.re = psi.real();
  ws.im = psi.imag();
  ws.tmp_re.noalias() = v.transpose() * ws.re;
  ws.tmp_im.noalias() = v.transpose() * ws.im;
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    const double c = std::cos(energies(i) * dt);
    const double s = std::sin(energies(i) * dt);
    // (re + i im) * (c - i s)
    const double r = ws.tmp_re(i) * c + ws.tmp_im(i) * s;
    const double m = ws.tmp_im(i) * c - ws.tmp_re(i) * s;
    ws.tmp_re(i) = r;
    ws.tmp_im(i) = m;
  }
  ws.re.noalias() = v * ws.tmp_re;
  ws.im.noalias() = v * ws.tmp_im;
  psi.real() = ws.re;
  psi.imag() = ws.im;
}

void check_norm(const Eigen::VectorXcd& psi) {
  const double drift = std::abs(psi.norm() - 1.0);
  if (!(drift <= 1e-8)) {
    throw IntegrationError("norm drift " + std::to_string(drift) + " exceeds 1e-8");
  }
}

}  // namespace

StateVector Propagator::propagate(std::span<const double> midpoint_field,
                                  const StateVector& psi0) const {
  check_inputs(midpoint_field, psi0);
  const Eigen::Index dim = drift_.rows();
  Eigen::VectorXcd psi = psi0.amplitudes();

  if (integrator_ == Integrator::kStrangSplit) {
    // Adjacent half steps of the drift merge into one full step.
    Eigen::VectorXcd next = drift_half_ * psi;
    psi.swap(next);
    for (int k = 0; k < n_steps_; ++k) {
      const double b = midpoint_field[static_cast<std::size_t>(k)];
      for (Eigen::Index i = 0; i < dim; ++i) {
        psi(i) *= std::polar(1.0, -b * control_diagonal_(i) * dt_);
      }
      next.noalias() = (k + 1 < n_steps_ ? drift_full_ : drift_half_) * psi;
      psi.swap(next);
    }
  } else {
    for (int k = 0; k < n_steps_; ++k) {
      apply_step(midpoint_field[static_cast<std::size_t>(k)], psi);
    }
  }
  check_norm(psi);
  psi.normalize();
  return StateVector(std::move(psi));
}

void Propagator::apply_step(double b, Eigen::VectorXcd& psi) const {
  const Eigen::Index dim = drift_.rows();
  if (integrator_ == Integrator::kStrangSplit) {
    psi = drift_half_ * psi;
    for (Eigen::Index i = 0; i < dim; ++i) {
      psi(i) *= std::polar(1.0, -b * control_diagonal_(i) * dt_);
    }
    psi = drift_half_ * psi;
    return;
  }
  thread_local std::unique_ptr<Workspace> ws;
  if (!ws || ws->hamiltonian.rows() != dim) {
    ws = std::make_unique<Workspace>(dim);
  }
  if (real_) {
    ws->hamiltonian = drift_real_ + b * control_real_;
    ws->solver.compute(ws->hamiltonian);
    apply_spectral_real(*ws, dt_, psi);
  } else {
    ws->complex_solver.compute(drift_ + b * control_);
    if (ws->complex_solver.info() != Eigen::Success) {
      throw NumericalError("midpoint step: eigensolver did not converge");
    }
    const Eigen::MatrixXcd& v = ws->complex_solver.eigenvectors();
    Eigen::VectorXcd coefficients = v.adjoint() * psi;
    for (Eigen::Index i = 0; i < dim; ++i) {
      coefficients(i) *= std::polar(1.0, -ws->complex_solver.eigenvalues()(i) * dt_);
    }
    psi = v * coefficients;
  }
}

StateVector Propagator::propagate(std::span<const double> midpoint_field,
                                  const StateVector& psi0, const StateVector& target,
                                  int record_stride, FidelityTrace& trace) const {
  check_inputs(midpoint_field, psi0);
  if (target.dim() != psi0.dim()) {
    throw DomainError("Propagator: target dimension mismatch");
  }
  if (record_stride < 1) {
    throw DomainError("Propagator: record_stride must be >= 1");
  }
  trace.times.assign(1, 0.0);
  trace.values.assign(1, fidelity(psi0, target));
  Eigen::VectorXcd psi = psi0.amplitudes();
  for (int k = 0; k < n_steps_; ++k) {
    apply_step(midpoint_field[static_cast<std::size_t>(k)], psi);
    if ((k + 1) % record_stride == 0 || k + 1 == n_steps_) {
      check_norm(psi);
      trace.times.push_back(k + 1 == n_steps_ ? duration_ : (k + 1) * dt_);
      trace.values.push_back(std::norm(target.amplitudes().dot(psi)));
    }
  }
  check_norm(psi);
  psi.normalize();
  return StateVector(std::move(psi));
}

EvolutionResult evolve(const HermitianOperator& drift, const HermitianOperator& control,
                       const std::function<double(double)>& field, double duration,
                       const StateVector& psi0, const PropagationSettings& settings,
                       const StateVector* target) {
  settings.validate();
  const Propagator propagator(drift, control, duration, settings.n_steps, settings.integrator);
  const std::vector<double> samples = propagator.sample(field);
  if (target == nullptr) {
    return {propagator.propagate(samples, psi0), std::nullopt};
  }
  FidelityTrace trace;
  StateVector final_state =
      propagator.propagate(samples, psi0, *target, settings.record_stride, trace);
  return {std::move(final_state), std::move(trace)};
}

ConvergedEvolution evolve_converged(const HermitianOperator& drift,
                                    const HermitianOperator& control,
                                    const std::function<double(double)>& field, double duration,
                                    const StateVector& psi0, const PropagationSettings& settings,
                                    int max_steps) {
  settings.validate();
  PropagationSettings current = settings;
  StateVector previous = evolve(drift, control, field, duration, psi0, current).final_state;
  double change = std::numeric_limits<double>::infinity();
  while (current.n_steps <= max_steps / 2) {
    current.n_steps *= 2;
    StateVector refined = evolve(drift, control, field, duration, psi0, current).final_state;
    change = (refined.amplitudes() - previous.amplitudes()).norm();
    previous = std::move(refined);
    if (change < settings.convergence_tol) {
      return {std::move(previous), current.n_steps, change, true};
    }
  }
  return {std::move(previous), current.n_steps, change, false};
}

}  // namespace dcrab
