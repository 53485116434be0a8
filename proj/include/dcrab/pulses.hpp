#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcrab/rng.hpp"

namespace dcrab {

constexpr int kDefaultHarmonics = 15;
constexpr int kMaxDressingLayers = 10;
inline constexpr const char* kPulseSchema = "dcrab-pulse/1";

/// One truncated random Fourier expansion:
///   B_l(t) = sum_m c_m cos(w_m t) + s_m sin(w_m t).
struct FourierLayer {
  std::vector<double> frequencies;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;

  std::size_t harmonics() const { return frequencies.size(); }
  void validate() const;
  double evaluate(double t) const;
  double max_abs_frequency() const;

  static FourierLayer zeros(std::vector<double> frequencies);
};

/// w_m = 2 pi (m + r_m) / T with r_m uniform in [-0.5, 0.5].
std::vector<double> sample_frequencies(int harmonics, double duration, CounterRng& rng);

/// M frequencies uniform in [w_min, w_max], sorted ascending.
std::vector<double> sample_frequencies_in_interval(int harmonics, double omega_min,
                                                   double omega_max, CounterRng& rng);

/// Sum of frozen Fourier layers on [0, T].
class DressedPulse {
 public:
  explicit DressedPulse(double duration, int max_layers = kMaxDressingLayers);

  double duration() const { return duration_; }
  int max_layers() const { return max_layers_; }
  std::size_t n_layers() const { return layers_.size(); }
  const std::vector<FourierLayer>& layers() const { return layers_; }
  const FourierLayer& layer(std::size_t l) const { return layers_.at(l); }

  /// Returns a new pulse with `layer` appended; this pulse is untouched.
  /// Throws CapacityError once max_layers layers are present.
  DressedPulse push_layer(FourierLayer layer) const;

  /// Returns a copy with one coefficient replaced, used by robustness scans.
  DressedPulse with_coefficient(std::size_t layer, std::size_t m, bool sine, double value) const;

  /// Throws DomainError outside [0, T].
  double evaluate(double t) const;
  double max_abs_frequency() const;

  std::optional<std::uint64_t> seed;

 private:
  double duration_;
  int max_layers_;
  std::vector<FourierLayer> layers_;
};

/// Uniform grid over [0, T] (both ends included) with at least
/// `samples_per_period` points per period of `max_frequency` and at least
/// 1024 points.
std::vector<double> extrema_grid(double duration, double max_frequency, int samples_per_period = 32);

/// (B_min, B_max) on extrema_grid. samples_per_period must be >= 8.
std::pair<double, double> extrema(const DressedPulse& pulse, int samples_per_period = 32);

/// Design matrix of one layer on fixed times: column m is cos(w_m t),
/// column M + m is sin(w_m t), so samples = matrix * [c; s].
Eigen::MatrixXd layer_design_matrix(std::span<const double> frequencies,
                                    std::span<const double> times);

std::string pulse_to_json(const DressedPulse& pulse);
DressedPulse pulse_from_json(const std::string& text);

/// `t,B` on a uniform grid of `points` points including both ends.
void write_pulse_shape_csv(std::ostream& out, const DressedPulse& pulse, int points = 2048);
std::vector<double> pulse_shape_times(double duration, int points = 2048);

}  // namespace dcrab
