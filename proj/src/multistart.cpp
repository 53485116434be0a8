#include "dcrab/multistart.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "dcrab/errors.hpp"

namespace dcrab {

Sampler uniform_box_sampler(double half_width) {
  return [half_width](CounterRng& rng, std::size_t dim) {
    std::vector<double> x(dim);
    for (double& v : x) v = rng.uniform(-half_width, half_width);
    return x;
  };
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::min(workers, n); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

MultistartResult multistart_search(const Objective& objective, std::size_t dim,
                                   const MultistartSettings& settings, const Sampler& sampler,
                                   CounterRng& rng,
                                   const std::vector<std::vector<double>>& seed_points) {
  if (dim == 0) throw DomainError("multistart_search: dimension must be >= 1");
  if (settings.n_samples < 1 || settings.n_best < 1) {
    throw DomainError("multistart_search: n_samples and n_best must be >= 1");
  }
  if (settings.n_best > settings.n_samples + static_cast<int>(seed_points.size())) {
    throw DomainError("multistart_search: n_best exceeds the number of candidates");
  }

  std::vector<std::vector<double>> candidates;
  candidates.reserve(seed_points.size() + static_cast<std::size_t>(settings.n_samples));
  for (const auto& p : seed_points) {
    if (p.size() != dim) throw DomainError("multistart_search: seed point has wrong dimension");
    candidates.push_back(p);
  }
  for (int i = 0; i < settings.n_samples; ++i) candidates.push_back(sampler(rng, dim));

  MultistartResult result;
  result.candidate_values.resize(candidates.size());
  parallel_for(candidates.size(), settings.threads, [&](std::size_t i) {
    const double f = objective(candidates[i]);
    result.candidate_values[i] = std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  });
  int evals = static_cast<int>(candidates.size());

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.candidate_values[a] < result.candidate_values[b];
  });
  result.refined.assign(order.begin(), order.begin() + settings.n_best);

  // With an early-exit target the searches after the first one (in rank
  // order) that reaches it are dropped. The outcome depends only on rank
  // order, never on which worker finished first.
  std::vector<NelderMeadResult> local(result.refined.size());
  std::atomic<std::size_t> first_hit{local.size()};
  parallel_for(local.size(), settings.threads, [&](std::size_t k) {
    if (first_hit.load() < k) return;
    local[k] = nelder_mead(objective, candidates[result.refined[k]], settings.local);
    if (settings.local.stop_below && local[k].f < *settings.local.stop_below) {
      std::size_t current = first_hit.load();
      while (k < current && !first_hit.compare_exchange_weak(current, k)) {
      }
    }
  });
  const std::size_t used = std::min(local.size(), first_hit.load() + 1);

  std::size_t best = 0;
  for (std::size_t k = 0; k < used; ++k) {
    evals += local[k].n_evals;
    result.local_values.push_back(local[k].f);
    if (local[k].f < local[best].f) best = k;
  }
  result.refined.resize(used);
  result.x = std::move(local[best].x);
  result.f = local[best].f;
  result.n_evals = evals;
  return result;
}

}  // namespace dcrab
