#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace dcrab {

using Objective = std::function<double(std::span<const double>)>;

struct NelderMeadSettings {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  /// Initial simplex: x0 and x0 + initial_step * e_i.
  double initial_step = 0.25;
  /// Stop when max f - min f over the simplex drops below this.
  double f_tolerance = 1e-8;
  /// Stop when the largest vertex distance (max norm) from the best vertex drops below this.
  double x_tolerance = 1e-8;
  /// Budget is evals_per_dimension * dim objective evaluations.
  int evals_per_dimension = 400;
  /// Optional early exit once the best value is strictly below this.
  std::optional<double> stop_below;
};

enum class NelderMeadStop { kFunctionSpread, kSimplexSize, kBudget, kTarget };

struct NelderMeadResult {
  std::vector<double> x;
  double f;
  int n_evals;
  NelderMeadStop stop;
};

/// Downhill simplex minimization. Non-finite objective values away from x0
/// are treated as +inf; a non-finite value at x0 throws DomainError.
NelderMeadResult nelder_mead(const Objective& objective, std::span<const double> x0,
                             const NelderMeadSettings& settings = {});

}  // namespace dcrab
