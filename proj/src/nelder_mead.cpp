#include "dcrab/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dcrab/errors.hpp"

namespace dcrab {

namespace {

class Simplex {
 public:
  Simplex(const Objective& objective, std::span<const double> x0, const NelderMeadSettings& s)
      : objective_(objective), dim_(x0.size()), vertices_(dim_ + 1), values_(dim_ + 1) {
    vertices_[0].assign(x0.begin(), x0.end());
    values_[0] = objective_(vertices_[0]);
    ++evals_;
    if (!std::isfinite(values_[0])) {
      throw DomainError("nelder_mead: objective is not finite at the starting point");
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      vertices_[i + 1] = vertices_[0];
      vertices_[i + 1][i] += s.initial_step;
      values_[i + 1] = evaluate(vertices_[i + 1]);
    }
    order_.resize(dim_ + 1);
  }

  double evaluate(const std::vector<double>& x) {
    ++evals_;
    const double f = objective_(x);
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  }

  // Stable sort keeps the earlier vertex first on ties, so a flat objective
  // reports x0 as the best point.
  void sort() {
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return values_[a] < values_[b]; });
  }

  std::size_t best() const { return order_.front(); }
  std::size_t worst() const { return order_.back(); }
  std::size_t second_worst() const { return order_[order_.size() - 2]; }

  double spread() const { return values_[worst()] - values_[best()]; }

  double size() const {
    double d = 0.0;
    const auto& xb = vertices_[best()];
    for (const auto& v : vertices_) {
      for (std::size_t j = 0; j < dim_; ++j) d = std::max(d, std::abs(v[j] - xb[j]));
    }
    return d;
  }

  std::vector<double> centroid() const {
    std::vector<double> c(dim_, 0.0);
    for (std::size_t i = 0; i + 1 < order_.size(); ++i) {
      const auto& v = vertices_[order_[i]];
      for (std::size_t j = 0; j < dim_; ++j) c[j] += v[j];
    }
    for (double& x : c) x /= static_cast<double>(dim_);
    return c;
  }

  // c + coefficient * (target - c)
  std::vector<double> along(const std::vector<double>& c, const std::vector<double>& target,
                            double coefficient) const {
    std::vector<double> out(dim_);
    for (std::size_t j = 0; j < dim_; ++j) out[j] = c[j] + coefficient * (target[j] - c[j]);
    return out;
  }

  void replace_worst(std::vector<double> x, double f) {
    vertices_[worst()] = std::move(x);
    values_[worst()] = f;
  }

  void shrink_towards_best(double factor) {
    const std::vector<double> xb = vertices_[best()];
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (i == best()) continue;
      for (std::size_t j = 0; j < dim_; ++j) {
        vertices_[i][j] = xb[j] + factor * (vertices_[i][j] - xb[j]);
      }
      values_[i] = evaluate(vertices_[i]);
    }
  }

  const Objective& objective_;
  std::size_t dim_;
  std::vector<std::vector<double>> vertices_;
  std::vector<double> values_;
  std::vector<std::size_t> order_;
  int evals_ = 0;
};

}  // namespace

NelderMeadResult nelder_mead(const Objective& objective, std::span<const double> x0,
                             const NelderMeadSettings& settings) {
  if (x0.empty()) throw DomainError("nelder_mead: empty starting point");
  const int budget = settings.evals_per_dimension * static_cast<int>(x0.size());
  Simplex simplex(objective, x0, settings);

  NelderMeadStop stop = NelderMeadStop::kBudget;
  for (;;) {
    simplex.sort();
    const double f_best = simplex.values_[simplex.best()];
    if (settings.stop_below && f_best < *settings.stop_below) {
      stop = NelderMeadStop::kTarget;
      break;
    }
    if (simplex.spread() < settings.f_tolerance) {
      stop = NelderMeadStop::kFunctionSpread;
      break;
    }
    if (simplex.size() < settings.x_tolerance) {
      stop = NelderMeadStop::kSimplexSize;
      break;
    }
    if (simplex.evals_ >= budget) {
      stop = NelderMeadStop::kBudget;
      break;
    }

    const std::vector<double> c = simplex.centroid();
    const std::vector<double>& xw = simplex.vertices_[simplex.worst()];
    const double f_worst = simplex.values_[simplex.worst()];
    const double f_second = simplex.values_[simplex.second_worst()];

    std::vector<double> xr = simplex.along(c, xw, -settings.reflection);
    const double fr = simplex.evaluate(xr);

    if (fr < f_best) {
      std::vector<double> xe = simplex.along(c, xr, settings.expansion);
      const double fe = simplex.evaluate(xe);
      if (fe < fr) {
        simplex.replace_worst(std::move(xe), fe);
      } else {
        simplex.replace_worst(std::move(xr), fr);
      }
      continue;
    }
    if (fr < f_second) {
      simplex.replace_worst(std::move(xr), fr);
      continue;
    }
    if (fr < f_worst) {
      std::vector<double> xc = simplex.along(c, xr, settings.contraction);
      const double fc = simplex.evaluate(xc);
      if (fc <= fr) {
        simplex.replace_worst(std::move(xc), fc);
        continue;
      }
    } else {
      std::vector<double> xc = simplex.along(c, xw, settings.contraction);
      const double fc = simplex.evaluate(xc);
      if (fc < f_worst) {
        simplex.replace_worst(std::move(xc), fc);
        continue;
      }
    }
    simplex.shrink_towards_best(settings.shrink);
  }

  const std::size_t b = simplex.best();
  return {simplex.vertices_[b], simplex.values_[b], simplex.evals_, stop};
}

}  // namespace dcrab
