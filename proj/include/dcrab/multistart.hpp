#pragma once

#include <functional>
#include <vector>

#include "dcrab/nelder_mead.hpp"
#include "dcrab/rng.hpp"

namespace dcrab {

/// Draws one candidate point of the given dimension.
using Sampler = std::function<std::vector<double>(CounterRng&, std::size_t dim)>;

/// Uniform in [-half_width, half_width] per coordinate.
Sampler uniform_box_sampler(double half_width);

struct MultistartSettings {
  int n_samples = 1000;
  int n_best = 20;
  NelderMeadSettings local;
  /// Worker threads for candidate evaluation and local searches. Results do
  /// not depend on this value.
  int threads = 1;
};

struct MultistartResult {
  std::vector<double> x;
  double f;
  int n_evals;
  /// Objective values of the raw candidates, in draw order (seed points first).
  std::vector<double> candidate_values;
  /// Indices (into the candidate list) of the points refined by Nelder-Mead.
  std::vector<std::size_t> refined;
  /// Best value of each local search, aligned with `refined`.
  std::vector<double> local_values;
};

/// Global random search: evaluate `seed_points` followed by n_samples draws
/// from `sampler`, rank by objective value (ties by draw order), run
/// Nelder-Mead from each of the n_best lowest and return the best local
/// result. Candidates are drawn sequentially from `rng`, so the first k
/// samples of a larger run coincide with a smaller run on the same stream.
MultistartResult multistart_search(const Objective& objective, std::size_t dim,
                                   const MultistartSettings& settings, const Sampler& sampler,
                                   CounterRng& rng,
                                   const std::vector<std::vector<double>>& seed_points = {});

/// Runs body(i) for i in [0, n) on up to `threads` threads.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace dcrab
