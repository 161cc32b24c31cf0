#pragma once

#include <cstddef>
#include <vector>

namespace rsa {

/// Scored items of one requirement. Ranking is by descending score with ties
/// kept in input order.
struct RankedGroup {
  std::vector<std::pair<double, bool>> items;  // (score, is_satisfied)
};

/// Mean over satisfied ranks r of (#satisfied at ranks <= r) / r.
/// Throws no_positive if nothing in the group is satisfied.
double average_precision(const RankedGroup& group);

double mean_average_precision(const std::vector<RankedGroup>& groups);

struct ConfusionCounts {
  size_t tp = 0;
  size_t fp = 0;
  size_t fn = 0;
};

double f_beta(double precision, double recall, double beta);
double f_beta(const ConfusionCounts& counts, double beta);

/// Unweighted mean of the per-class F1 scores.
double macro_f1(const std::vector<ConfusionCounts>& per_class);

}  // namespace rsa
