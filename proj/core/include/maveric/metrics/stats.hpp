#pragma once

#include <utility>
#include <vector>

namespace maveric::metrics {

enum class CorrMethod { PEARSON, SPEARMAN };

/// Product-moment or rank correlation with a two-sided p-value from the
/// t-distribution (df = n - 2). Requires n >= 3 and finite inputs; zero
/// variance in either series throws UndefinedCorrelation.
std::pair<double, double> correlate(const std::vector<double>& xs,
                                    const std::vector<double>& ys,
                                    CorrMethod method);

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> average_ranks(const std::vector<double>& xs);

}  // namespace maveric::metrics
