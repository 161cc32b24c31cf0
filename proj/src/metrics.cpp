#include "rsa/metrics.hpp"

#include <algorithm>

#include "rsa/errors.hpp"

namespace rsa {

double average_precision(const RankedGroup& group) {
  std::vector<size_t> order(group.items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return group.items[a].first > group.items[b].first;
  });

  size_t hits = 0;
  double sum = 0.0;
  for (size_t rank = 1; rank <= order.size(); ++rank) {
    if (group.items[order[rank - 1]].second) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  if (hits == 0) fail(Errc::no_positive, "average precision over a group with no satisfied item");
  return sum / static_cast<double>(hits);
}

double mean_average_precision(const std::vector<RankedGroup>& groups) {
  if (groups.empty()) fail(Errc::no_positive, "mean average precision over zero groups");
  double sum = 0.0;
  for (const auto& g : groups) sum += average_precision(g);
  return sum / static_cast<double>(groups.size());
}

double f_beta(double precision, double recall, double beta) {
  if (precision == 0.0 && recall == 0.0) return 0.0;
  double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

double f_beta(const ConfusionCounts& counts, double beta) {
  if (counts.tp + counts.fp + counts.fn == 0)
    fail(Errc::no_positive, "f_beta over empty confusion counts");
  double precision =
      counts.tp + counts.fp == 0 ? 0.0 : static_cast<double>(counts.tp) / (counts.tp + counts.fp);
  double recall =
      counts.tp + counts.fn == 0 ? 0.0 : static_cast<double>(counts.tp) / (counts.tp + counts.fn);
  return f_beta(precision, recall, beta);
}

double macro_f1(const std::vector<ConfusionCounts>& per_class) {
  if (per_class.size() < 2) fail(Errc::config_error, "macro F1 needs at least two classes");
  double sum = 0.0;
  for (const auto& counts : per_class) {
    double precision =
        counts.tp + counts.fp == 0 ? 0.0 : static_cast<double>(counts.tp) / (counts.tp + counts.fp);
    double recall =
        counts.tp + counts.fn == 0 ? 0.0 : static_cast<double>(counts.tp) / (counts.tp + counts.fn);
    sum += f_beta(precision, recall, 1.0);
  }
  return sum / static_cast<double>(per_class.size());
}

}  // namespace rsa
