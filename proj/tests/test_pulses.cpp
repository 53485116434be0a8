#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "dcrab/errors.hpp"
#include "dcrab/pulses.hpp"
#include "test_support.hpp"

namespace dcrab {
namespace {

constexpr double kPi = std::numbers::pi;

FourierLayer single_term(double omega, double c, double s) { return {{omega}, {c}, {s}}; }

TEST(Frequencies, WithinHalfAHarmonic) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed);
    const double duration = 0.3 + 0.2 * static_cast<double>(seed);
    const auto w = sample_frequencies(15, duration, rng);
    ASSERT_EQ(w.size(), 15u);
    for (int m = 0; m < 15; ++m) {
      EXPECT_LE(std::abs(w[static_cast<std::size_t>(m)] * duration / (2 * kPi) - m), 0.5);
    }
  }
}

TEST(Frequencies, BandwidthBound) {
  CounterRng rng(3);
  const auto w = sample_frequencies(15, 5.0, rng);
  for (double x : w) EXPECT_LE(std::abs(x), 2 * kPi * 14.5 / 5.0);
}

TEST(Frequencies, DeterministicPerSeed) {
  CounterRng a(77), b(77), c(78);
  const auto wa = sample_frequencies(10, 2.0, a);
  EXPECT_EQ(wa, sample_frequencies(10, 2.0, b));
  EXPECT_NE(wa, sample_frequencies(10, 2.0, c));
}

TEST(Frequencies, IntervalMode) {
  CounterRng rng(5);
  const auto w = sample_frequencies_in_interval(12, 1.0, 4.0, rng);
  ASSERT_EQ(w.size(), 12u);
  EXPECT_TRUE(std::is_sorted(w.begin(), w.end()));
  for (double x : w) {
    EXPECT_GE(x, 1.0);
    EXPECT_LE(x, 4.0);
  }
  EXPECT_THROW(sample_frequencies_in_interval(3, 4.0, 1.0, rng), DomainError);
  EXPECT_THROW(sample_frequencies(0, 1.0, rng), DomainError);
  EXPECT_THROW(sample_frequencies(3, 0.0, rng), DomainError);
}

TEST(Pulse, ConstantTerm) {
  const DressedPulse p = DressedPulse(2.0).push_layer(single_term(0.0, 1.0, 0.0));
  for (double t : {0.0, 0.3, 1.7, 2.0}) EXPECT_EQ(p.evaluate(t), 1.0);
}

TEST(Pulse, ValueAtZeroIsSumOfCosines) {
  const DressedPulse p = testing::random_pulse(3.0, 1).push_layer(
      FourierLayer{{0.5, 1.5}, {0.25, -2.0}, {7.0, 9.0}});
  double expected = 0.0;
  for (const FourierLayer& l : p.layers()) {
    for (double c : l.cos_coeffs) expected += c;
  }
  EXPECT_NEAR(p.evaluate(0.0), expected, 1e-14);
}

TEST(Pulse, DressingIsAdditive) {
  const DressedPulse base = testing::random_pulse(2.5, 8);
  const DressedPulse extra = testing::random_pulse(2.5, 9);
  const DressedPulse both = base.push_layer(extra.layer(0));
  for (int i = 0; i <= 50; ++i) {
    const double t = 2.5 * i / 50;
    EXPECT_NEAR(both.evaluate(t), base.evaluate(t) + extra.evaluate(t), 1e-13);
  }
}

TEST(Pulse, LinearInCoefficients) {
  CounterRng rng(4);
  const auto w = sample_frequencies(6, 2.0, rng);
  FourierLayer x = FourierLayer::zeros(w), y = FourierLayer::zeros(w), mix = FourierLayer::zeros(w);
  const double alpha = 0.7, beta = -1.3;
  for (std::size_t m = 0; m < w.size(); ++m) {
    x.cos_coeffs[m] = rng.uniform(-1, 1);
    x.sin_coeffs[m] = rng.uniform(-1, 1);
    y.cos_coeffs[m] = rng.uniform(-1, 1);
    y.sin_coeffs[m] = rng.uniform(-1, 1);
    mix.cos_coeffs[m] = alpha * x.cos_coeffs[m] + beta * y.cos_coeffs[m];
    mix.sin_coeffs[m] = alpha * x.sin_coeffs[m] + beta * y.sin_coeffs[m];
  }
  const DressedPulse px = DressedPulse(2.0).push_layer(x);
  const DressedPulse py = DressedPulse(2.0).push_layer(y);
  const DressedPulse pm = DressedPulse(2.0).push_layer(mix);
  for (int i = 0; i <= 40; ++i) {
    const double t = 2.0 * i / 40;
    EXPECT_NEAR(pm.evaluate(t), alpha * px.evaluate(t) + beta * py.evaluate(t), 1e-13);
  }
}

TEST(Pulse, EvaluateOutsideDomainThrows) {
  const DressedPulse p = testing::random_pulse(1.0, 2);
  EXPECT_THROW(p.evaluate(-1e-9), DomainError);
  EXPECT_THROW(p.evaluate(1.0 + 1e-9), DomainError);
  EXPECT_NO_THROW(p.evaluate(1.0));
}

TEST(Pulse, ZeroLayerLeavesPulseUnchanged) {
  const DressedPulse p = testing::random_pulse(2.0, 3);
  CounterRng rng(1);
  const DressedPulse q = p.push_layer(FourierLayer::zeros(sample_frequencies(15, 2.0, rng)));
  for (int i = 0; i <= 20; ++i) EXPECT_EQ(q.evaluate(0.1 * i), p.evaluate(0.1 * i));
}

TEST(Pulse, LayerCapacity) {
  DressedPulse p(1.0);
  for (int l = 0; l < kMaxDressingLayers; ++l) p = p.push_layer(single_term(1.0, 0.1, 0.0));
  EXPECT_EQ(p.n_layers(), 10u);
  EXPECT_THROW(p.push_layer(single_term(1.0, 0.1, 0.0)), CapacityError);
  EXPECT_THROW(DressedPulse(1.0, 2).push_layer(single_term(0, 0, 0)).push_layer(single_term(0, 0, 0))
                   .push_layer(single_term(0, 0, 0)),
               CapacityError);
}

TEST(Pulse, PushLayerDoesNotTouchOriginal) {
  const DressedPulse p = testing::random_pulse(2.0, 5);
  const FourierLayer before = p.layer(0);
  const DressedPulse q = p.push_layer(single_term(2.0, 1.0, 1.0));
  EXPECT_EQ(p.n_layers(), 1u);
  EXPECT_EQ(q.layer(0).cos_coeffs, before.cos_coeffs);
  EXPECT_EQ(q.layer(0).sin_coeffs, before.sin_coeffs);
  EXPECT_EQ(q.layer(0).frequencies, before.frequencies);
}

TEST(Pulse, LayerValidation) {
  EXPECT_THROW(DressedPulse(1.0).push_layer(FourierLayer{{1.0, 2.0}, {0.0}, {0.0, 1.0}}),
               DomainError);
  EXPECT_THROW(DressedPulse(1.0).push_layer(single_term(std::nan(""), 0, 0)), DomainError);
  EXPECT_THROW(DressedPulse(0.0), DomainError);
}

TEST(Pulse, WithCoefficient) {
  const DressedPulse p = testing::random_pulse(2.0, 6);
  const DressedPulse q = p.with_coefficient(0, 2, true, 9.0);
  EXPECT_EQ(q.layer(0).sin_coeffs[2], 9.0);
  EXPECT_EQ(p.layer(0).sin_coeffs[2], testing::random_pulse(2.0, 6).layer(0).sin_coeffs[2]);
  EXPECT_THROW(p.with_coefficient(1, 0, false, 0.0), DomainError);
  EXPECT_THROW(p.with_coefficient(0, 4, false, 0.0), DomainError);
}

TEST(Extrema, CosineAtTheBound) {
  const double duration = 3.0;
  const DressedPulse p =
      DressedPulse(duration).push_layer(single_term(2 * kPi / duration, 4 * kPi, 0.0));
  const auto [lo, hi] = extrema(p);
  EXPECT_NEAR(lo, -4 * kPi, 4 * kPi * 1e-3);
  EXPECT_NEAR(hi, 4 * kPi, 4 * kPi * 1e-3);
}

TEST(Extrema, ConstantPulseExact) {
  const DressedPulse p = DressedPulse(1.0).push_layer(single_term(0.0, -2.5, 3.0));
  const auto [lo, hi] = extrema(p);
  EXPECT_EQ(lo, -2.5);
  EXPECT_EQ(hi, -2.5);
}

TEST(Extrema, RefinementStable) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CounterRng rng(seed);
    FourierLayer layer = FourierLayer::zeros(sample_frequencies(15, 4.0, rng));
    for (auto& c : layer.cos_coeffs) c = rng.uniform(-2, 2);
    for (auto& s : layer.sin_coeffs) s = rng.uniform(-2, 2);
    const DressedPulse p = DressedPulse(4.0).push_layer(layer);
    const auto coarse = extrema(p, 32);
    const auto fine = extrema(p, 64);
    const double scale = std::max(std::abs(fine.first), std::abs(fine.second));
    EXPECT_LT(std::abs(coarse.first - fine.first), 1e-4 * scale);
    EXPECT_LT(std::abs(coarse.second - fine.second), 1e-4 * scale);
  }
}

TEST(Extrema, GridShape) {
  const auto grid = extrema_grid(2.0, 0.0);
  EXPECT_EQ(grid.size(), 1024u);
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_EQ(grid.back(), 2.0);
  const auto dense = extrema_grid(10.0, 2 * kPi * 20, 32);
  EXPECT_GE(dense.size(), static_cast<std::size_t>(32 * 10 * 20));
  EXPECT_THROW(extrema_grid(1.0, 1.0, 7), DomainError);
}

TEST(DesignMatrix, ReproducesEvaluation) {
  const DressedPulse p = testing::random_pulse(2.0, 12, 5);
  const FourierLayer& layer = p.layer(0);
  const std::vector<double> times{0.0, 0.4, 1.1, 2.0};
  const Eigen::MatrixXd design = layer_design_matrix(layer.frequencies, times);
  Eigen::VectorXd coeffs(10);
  for (int m = 0; m < 5; ++m) {
    coeffs(m) = layer.cos_coeffs[static_cast<std::size_t>(m)];
    coeffs(5 + m) = layer.sin_coeffs[static_cast<std::size_t>(m)];
  }
  const Eigen::VectorXd values = design * coeffs;
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_NEAR(values(static_cast<Eigen::Index>(i)), p.evaluate(times[i]), 1e-13);
  }
}

TEST(PulseJson, RoundTripIsBitIdentical) {
  DressedPulse p = testing::random_pulse(2.7, 31, 15).push_layer(testing::random_pulse(2.7, 32, 15).layer(0));
  p.seed = 0xfedcba9876543210ULL;
  const std::string text = pulse_to_json(p);
  const DressedPulse q = pulse_from_json(text);
  EXPECT_EQ(q.duration(), p.duration());
  EXPECT_EQ(q.seed, p.seed);
  EXPECT_EQ(q.max_layers(), p.max_layers());
  ASSERT_EQ(q.n_layers(), p.n_layers());
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    EXPECT_EQ(q.layer(l).frequencies, p.layer(l).frequencies);
    EXPECT_EQ(q.layer(l).cos_coeffs, p.layer(l).cos_coeffs);
    EXPECT_EQ(q.layer(l).sin_coeffs, p.layer(l).sin_coeffs);
  }
  EXPECT_EQ(pulse_to_json(q), text);
}

TEST(PulseJson, Errors) {
  const std::string good = pulse_to_json(testing::random_pulse(1.0, 1));
  try {
    pulse_from_json(R"({"schema":"dcrab-pulse/1","layers":[]})");
    FAIL() << "missing T accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.where(), "/T");
  }
  EXPECT_THROW(pulse_from_json(R"({"schema":"dcrab-pulse/9","T":1,"layers":[]})"),
               UnsupportedVersionError);
  EXPECT_THROW(pulse_from_json("{\"schema\": "), ParseError);
  try {
    pulse_from_json(
        R"({"schema":"dcrab-pulse/1","T":1,"layers":[{"frequencies":[1],"cos_coeffs":["x"],"sin_coeffs":[0]}]})");
    FAIL() << "string coefficient accepted";
  } catch (const ParseError& e) {
    EXPECT_NE(e.where().find("/layers/0/cos_coeffs/0"), std::string::npos) << e.where();
  }
  EXPECT_NO_THROW(pulse_from_json(good));
}

TEST(PulseShape, CsvGrid) {
  const DressedPulse p = DressedPulse(1.0).push_layer(single_term(0.0, 0.5, 0.0));
  std::ostringstream out;
  write_pulse_shape_csv(out, p);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,B");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  EXPECT_EQ(rows, 2048);
  EXPECT_EQ(last, "1,0.5");
}

}  // namespace
}  // namespace dcrab
