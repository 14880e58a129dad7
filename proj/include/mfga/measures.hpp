#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "mfga/errors.hpp"

namespace mfga {

/// Weighted atoms on the real line, sorted ascending, weights summing to one.
class EmpiricalMeasure {
public:
  EmpiricalMeasure() = default;

  const std::vector<double> &points() const { return points_; }
  const std::vector<double> &weights() const { return weights_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i)
      m += weights_[i] * points_[i];
    return m;
  }

  /// Copy with every atom shifted by c.
  EmpiricalMeasure shifted(double c) const {
    EmpiricalMeasure out = *this;
    for (double &p : out.points_)
      p += c;
    return out;
  }

private:
  std::vector<double> points_;
  std::vector<double> weights_;

  friend EmpiricalMeasure make_empirical(const std::vector<double> &,
                                         const std::optional<std::vector<double>> &);
};

/// Builds the canonical sorted representation; weights default to uniform and
/// are renormalized to unit mass.
inline EmpiricalMeasure make_empirical(const std::vector<double> &samples,
                                       const std::optional<std::vector<double>> &weights = std::nullopt) {
  if (samples.empty())
    throw InvalidArgument("make_empirical: empty sample set");
  const std::size_t n = samples.size();
  std::vector<double> w;
  if (weights) {
    if (weights->size() != n)
      throw InvalidArgument("make_empirical: weights and samples differ in length");
    w = *weights;
  } else {
    w.assign(n, 1.0 / static_cast<double>(n));
  }
  double total = 0.0;
  for (double wi : w) {
    if (!(wi >= 0.0) || !std::isfinite(wi))
      throw InvalidArgument("make_empirical: negative or non-finite weight");
    total += wi;
  }
  if (!(total > 0.0))
    throw InvalidArgument("make_empirical: weights have zero total mass");
  for (double s : samples)
    if (!std::isfinite(s))
      throw InvalidArgument("make_empirical: non-finite sample");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a] < samples[b]; });

  EmpiricalMeasure mu;
  mu.points_.resize(n);
  mu.weights_.resize(n);
  const bool unit = std::abs(total - 1.0) <= 1e-14;
  for (std::size_t k = 0; k < n; ++k) {
    mu.points_[k] = samples[order[k]];
    mu.weights_[k] = unit ? w[order[k]] : w[order[k]] / total;
  }
  return mu;
}

/// Permutation that sorts the samples the same way make_empirical does.
inline std::vector<std::size_t> sort_permutation(const std::vector<double> &samples) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a] < samples[b]; });
  return order;
}

/// Exact W_q on the line by quantile coupling over the merged breakpoints.
inline double wq_distance(const EmpiricalMeasure &mu, const EmpiricalMeasure &nu, int q) {
  if (q != 1 && q != 2)
    throw InvalidArgument("wq_distance: q must be 1 or 2");
  if (mu.empty() || nu.empty())
    throw InvalidArgument("wq_distance: empty measure");
  const auto &xp = mu.points();
  const auto &yp = nu.points();
  auto cumulative = [](const std::vector<double> &w) {
    std::vector<double> c(w.size());
    std::partial_sum(w.begin(), w.end(), c.begin());
    c.back() = 1.0;
    return c;
  };
  const std::vector<double> fx = cumulative(mu.weights());
  const std::vector<double> fy = cumulative(nu.weights());

  std::size_t i = 0, j = 0;
  double s = 0.0, acc = 0.0;
  while (i < xp.size() && j < yp.size()) {
    const double next = std::min(fx[i], fy[j]);
    const double d = std::abs(xp[i] - yp[j]);
    acc += (next - s) * (q == 1 ? d : d * d);
    s = next;
    if (fx[i] <= next)
      ++i;
    if (fy[j] <= next)
      ++j;
  }
  return q == 1 ? acc : std::sqrt(acc);
}

struct Moments {
  double mean;
  double second_moment;
};

inline Moments moments(const EmpiricalMeasure &mu) {
  double m1 = 0.0, m2 = 0.0;
  const auto &p = mu.points();
  const auto &w = mu.weights();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m1 += w[i] * p[i];
    m2 += w[i] * p[i] * p[i];
  }
  return {m1, m2};
}

} // namespace mfga
