#include "maveric/metrics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "maveric/errors.hpp"

namespace maveric::metrics {

std::vector<double> average_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedCorrelation("correlate: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::pair<double, double> correlate(const std::vector<double>& xs,
                                    const std::vector<double>& ys,
                                    CorrMethod method) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("correlate: length mismatch");
  if (xs.size() < 3) throw std::invalid_argument("correlate: need n >= 3");
  for (double v : xs)
    if (!std::isfinite(v)) throw std::invalid_argument("correlate: non-finite x");
  for (double v : ys)
    if (!std::isfinite(v)) throw std::invalid_argument("correlate: non-finite y");

  double r;
  if (method == CorrMethod::PEARSON) {
    r = pearson(xs, ys);
  } else {
    r = pearson(average_ranks(xs), average_ranks(ys));
  }

  const double df = static_cast<double>(xs.size()) - 2.0;
  double p;
  if (1.0 - r * r <= 0.0) {
    p = 0.0;
  } else {
    const double t = r * std::sqrt(df / (1.0 - r * r));
    boost::math::students_t dist(df);
    p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return {r, p};
}

}  // namespace maveric::metrics
