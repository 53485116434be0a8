#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "dcrab/errors.hpp"
#include "dcrab/propagator.hpp"
#include "test_support.hpp"

namespace dcrab {
namespace {

Eigen::MatrixXcd random_hermitian(Eigen::Index dim, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXcd m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  }
  return 0.5 * (m + m.adjoint());
}

struct Chain {
  SubspaceBasis basis;
  HermitianOperator drift;
  HermitianOperator control;
  StateVector initial;
  StateVector target;
};

Chain chain(int n, int a) {
  SubspaceBasis basis = enumerate_subspace(n, a);
  HermitianOperator h = build_heisenberg(basis);
  HermitianOperator z = build_local_z(basis, 1);
  StateVector psi0 = product_state(basis, default_initial_bits(n, a));
  StateVector target = dicke_state(basis);
  return {std::move(basis), std::move(h), std::move(z), std::move(psi0), std::move(target)};
}

TEST(StepUnitary, ZeroHamiltonianIsIdentity) {
  const HermitianOperator zero(Eigen::MatrixXcd::Zero(3, 3));
  EXPECT_LE((step_unitary(zero, 0.3) - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(StepUnitary, DiagonalPiStep) {
  Eigen::MatrixXcd z(2, 2);
  z << 1, 0, 0, -1;
  const Eigen::MatrixXcd u = step_unitary(HermitianOperator(z), std::numbers::pi);
  EXPECT_LE((u + Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(StepUnitary, UnitaryForRandomHermitian) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Eigen::MatrixXcd u = step_unitary(HermitianOperator(random_hermitian(8, seed)), 0.1);
    EXPECT_LE((u.adjoint() * u - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(StepUnitary, MatchesPadeExponential) {
  const Eigen::MatrixXcd h = random_hermitian(6, 42);
  const Eigen::MatrixXcd pade = (Complex(0.0, -0.37) * h).exp();
  EXPECT_LE((step_unitary(HermitianOperator(h), 0.37) - pade).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AutoSteps, Examples) {
  EXPECT_GE(auto_steps(1.0, 2 * std::numbers::pi * 15), 1000);
  EXPECT_EQ(auto_steps(10.0, 2 * std::numbers::pi * 15 / 10), 1000);
  EXPECT_EQ(auto_steps(5.0, 0.0), 1000);
  EXPECT_EQ(auto_steps(20.0, 2 * std::numbers::pi * 14.5 / 20 * 10), 5800);
}

TEST(Evolve, EigenstateIsStationary) {
  const Chain c = chain(4, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(c.drift.matrix());
  const StateVector eigenstate(solver.eigenvectors().col(2));
  PropagationSettings settings;
  const auto result =
      evolve(c.drift, c.control, [](double) { return 0.0; }, 3.0, eigenstate, settings);
  EXPECT_NEAR(fidelity(result.final_state, eigenstate), 1.0, 1e-12);
}

TEST(Evolve, FreeEvolutionMatchesFullSpace) {
  for (int n = 2; n <= 6; ++n) {
    for (int a = 1; a < n; ++a) {
      const Chain c = chain(n, a);
      const FullSpaceOperators full = full_space_operators(n, 1.0, 1);
      const Eigen::MatrixXcd u_full = (Complex(0.0, -1.3) * full.heisenberg.matrix()).exp();
      const Eigen::VectorXcd expected = u_full * embed_in_full_space(c.initial.amplitudes(), c.basis);
      PropagationSettings settings;
      settings.n_steps = 10;
      const auto result =
          evolve(c.drift, c.control, [](double) { return 0.0; }, 1.3, c.initial, settings);
      const Eigen::VectorXcd got = embed_in_full_space(result.final_state.amplitudes(), c.basis);
      EXPECT_NEAR(std::norm(expected.dot(got)), 1.0, 1e-8) << n << "," << a;
    }
  }
}

TEST(Evolve, DrivenEvolutionMatchesPadeOracle) {
  for (int n = 2; n <= 5; ++n) {
    for (int a = 1; a < n; ++a) {
      const Chain c = chain(n, a);
      const FullSpaceOperators full = full_space_operators(n, 1.0, 1);
      const DressedPulse pulse = testing::random_pulse(1.5, 100 + n * 10 + a);
      PropagationSettings settings;
      settings.n_steps = 300;
      const auto result = evolve(c.drift, c.control, [&](double t) { return pulse.evaluate(t); },
                                 1.5, c.initial, settings);
      const Eigen::VectorXcd oracle =
          testing::pade_propagate(full.heisenberg.matrix(), full.local_z.matrix(), pulse, 300,
                                  embed_in_full_space(c.initial.amplitudes(), c.basis));
      const Eigen::VectorXcd target = embed_in_full_space(c.target.amplitudes(), c.basis);
      EXPECT_NEAR(fidelity(result.final_state, c.target), std::norm(target.dot(oracle)), 1e-10);
    }
  }
}

TEST(Evolve, SplitAndMidpointAgreeAtConvergence) {
  const Chain c = chain(5, 2);
  const DressedPulse pulse = testing::random_pulse(2.0, 5);
  const auto field = [&](double t) { return pulse.evaluate(t); };
  PropagationSettings settings;
  settings.n_steps = 20000;
  const double midpoint = fidelity(evolve(c.drift, c.control, field, 2.0, c.initial, settings).final_state, c.target);
  settings.integrator = Integrator::kStrangSplit;
  const double split = fidelity(evolve(c.drift, c.control, field, 2.0, c.initial, settings).final_state, c.target);
  EXPECT_NEAR(midpoint, split, 1e-7);
}

TEST(Evolve, SecondOrderConvergence) {
  const Chain c = chain(4, 1);
  const DressedPulse pulse = testing::random_pulse(2.0, 9);
  const auto field = [&](double t) { return pulse.evaluate(t); };
  for (Integrator integrator : {Integrator::kMidpointSpectral, Integrator::kStrangSplit}) {
    PropagationSettings settings;
    settings.integrator = integrator;
    std::vector<Eigen::VectorXcd> finals;
    for (int steps : {200, 400, 800}) {
      settings.n_steps = steps;
      finals.push_back(evolve(c.drift, c.control, field, 2.0, c.initial, settings).final_state.amplitudes());
    }
    const double ratio = (finals[0] - finals[1]).norm() / (finals[1] - finals[2]).norm();
    EXPECT_NEAR(ratio, 4.0, 0.3) << to_string(integrator);
  }
}

TEST(Evolve, TraceStartsAtInitialFidelity) {
  const Chain c = chain(5, 2);
  PropagationSettings settings;
  settings.n_steps = 1000;
  settings.record_stride = 7;
  const DressedPulse pulse = testing::random_pulse(2.0, 1);
  const auto result = evolve(c.drift, c.control, [&](double t) { return pulse.evaluate(t); }, 2.0,
                             c.initial, settings, &c.target);
  ASSERT_TRUE(result.trace);
  const FidelityTrace& trace = *result.trace;
  ASSERT_EQ(trace.times.size(), trace.values.size());
  EXPECT_EQ(trace.times.front(), 0.0);
  EXPECT_EQ(trace.times.back(), 2.0);
  EXPECT_EQ(trace.times.size(), 1u + 1000 / 7 + 1);
  EXPECT_NEAR(trace.values.front(), 0.1, 1e-15);
  EXPECT_NEAR(trace.values.back(), fidelity(result.final_state, c.target), 1e-12);
  for (std::size_t i = 1; i < trace.times.size(); ++i) {
    EXPECT_GT(trace.times[i], trace.times[i - 1]);
    EXPECT_GE(trace.values[i], 0.0);
    EXPECT_LE(trace.values[i], 1.0 + 1e-12);
  }
}

TEST(Evolve, TraceCsvFormat) {
  FidelityTrace trace{{0.0, 0.5}, {1.0 / 3.0, 0.25}};
  std::ostringstream out;
  write_trace_csv(out, trace);
  EXPECT_EQ(out.str(), "t,fidelity\n0,0.333333333333\n0.5,0.25\n");
}

TEST(Evolve, NonFiniteFieldIsRejected) {
  const Chain c = chain(3, 1);
  PropagationSettings settings;
  const auto bad = [](double t) { return t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0; };
  EXPECT_THROW(evolve(c.drift, c.control, bad, 1.0, c.initial, settings), FieldError);
  const auto inf = [](double) { return std::numeric_limits<double>::infinity(); };
  settings.integrator = Integrator::kStrangSplit;
  EXPECT_THROW(evolve(c.drift, c.control, inf, 1.0, c.initial, settings), FieldError);
}

TEST(Evolve, InvalidInputs) {
  const Chain c = chain(3, 1);
  PropagationSettings settings;
  settings.n_steps = 0;
  const auto zero = [](double) { return 0.0; };
  EXPECT_THROW(evolve(c.drift, c.control, zero, 1.0, c.initial, settings), DomainError);
  settings.n_steps = 10;
  EXPECT_THROW(evolve(c.drift, c.control, zero, -1.0, c.initial, settings), DomainError);
  const StateVector wrong = dicke_state(enumerate_subspace(4, 1));
  EXPECT_THROW(evolve(c.drift, c.control, zero, 1.0, wrong, settings), DomainError);
  EXPECT_THROW(integrator_from_string("rk4"), DomainError);
}

TEST(Evolve, SplitNeedsDiagonalControl) {
  const Chain c = chain(3, 1);
  EXPECT_THROW(Propagator(c.drift, c.drift, 1.0, 10, Integrator::kStrangSplit), DomainError);
}

TEST(Evolve, ComplexOperatorsUseGeneralPath) {
  const HermitianOperator h(random_hermitian(4, 3));
  const HermitianOperator z(random_hermitian(4, 4));
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v(0) = 1.0;
  const StateVector psi0(v);
  PropagationSettings settings;
  settings.n_steps = 50;
  const auto field = [](double t) { return std::sin(3 * t); };
  const auto result = evolve(h, z, field, 1.0, psi0, settings);
  Eigen::VectorXcd expected = v;
  for (int k = 0; k < 50; ++k) {
    const double b = field((k + 0.5) * 0.02);
    expected = (Complex(0.0, -0.02) * (h.matrix() + b * z.matrix())).exp() * expected;
  }
  EXPECT_LE((result.final_state.amplitudes() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EvolveConverged, DoublesUntilStable) {
  const Chain c = chain(4, 2);
  const DressedPulse pulse = testing::random_pulse(2.0, 11);
  PropagationSettings settings;
  settings.n_steps = 100;
  const auto result = evolve_converged(c.drift, c.control,
                                       [&](double t) { return pulse.evaluate(t); }, 2.0, c.initial,
                                       settings);
  EXPECT_TRUE(result.converged);
  EXPECT_LT(result.last_change, 1e-9);
  EXPECT_EQ(result.n_steps % 100, 0);
  settings.n_steps = result.n_steps * 2;
  const auto finer = evolve(c.drift, c.control, [&](double t) { return pulse.evaluate(t); }, 2.0,
                            c.initial, settings);
  EXPECT_LT(std::abs(fidelity(finer.final_state, c.target) - fidelity(result.final_state, c.target)),
            1e-9);
}

TEST(EvolveConverged, ReportsFailureWhenCapped) {
  const Chain c = chain(4, 2);
  const DressedPulse pulse = testing::random_pulse(2.0, 11);
  PropagationSettings settings;
  settings.n_steps = 10;
  const auto result = evolve_converged(c.drift, c.control,
                                       [&](double t) { return pulse.evaluate(t); }, 2.0, c.initial,
                                       settings, 40);
  EXPECT_FALSE(result.converged);
  EXPECT_EQ(result.n_steps, 40);
}

}  // namespace
}  // namespace dcrab
