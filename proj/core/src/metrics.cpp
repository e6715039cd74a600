#include "macrograph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "macrograph/common.hpp"

namespace macrograph {

std::optional<double> auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw UsageError("auc: size mismatch");
  std::size_t pos = 0, neg = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw UsageError("auc: labels must be 0/1");
    (y == 1 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) return std::nullopt;

  // Midranks over the sorted scores; AUC = (R_pos - P(P+1)/2) / (P*N).
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    i = j;
  }
  double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);
}

std::optional<double> gauc(const std::vector<double>& scores, const std::vector<int>& labels,
                           const std::vector<std::uint32_t>& user_ids) {
  EvalReport r = evaluate_scores(scores, labels, user_ids);
  return r.gauc;
}

double logloss(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw UsageError("logloss: size mismatch");
  if (scores.empty()) throw UsageError("logloss: empty input");
  constexpr double kClamp = 1e-7;
  double s = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    double p = std::min(1.0 - kClamp, std::max(kClamp, scores[k]));
    s += labels[k] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return s / static_cast<double>(scores.size());
}

EvalReport evaluate_scores(const std::vector<double>& scores, const std::vector<int>& labels,
                           const std::vector<std::uint32_t>& user_ids) {
  if (scores.size() != labels.size() || scores.size() != user_ids.size())
    throw UsageError("evaluate_scores: size mismatch");
  EvalReport rep;
  rep.examples = scores.size();
  for (int y : labels) rep.positives += (y == 1);
  rep.auc = auc(scores, labels);
  rep.logloss = logloss(scores, labels);

  std::map<std::uint32_t, std::vector<std::size_t>> by_user;
  for (std::size_t k = 0; k < scores.size(); ++k) by_user[user_ids[k]].push_back(k);
  double weighted = 0.0;
  std::size_t weight_total = 0;
  for (const auto& [u, idxs] : by_user) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t k : idxs) {
      s.push_back(scores[k]);
      y.push_back(labels[k]);
    }
    auto a = auc(s, y);
    if (!a) continue;  // user lacks one of the classes
    rep.per_user.push_back({u, *a, idxs.size()});
    weighted += *a * static_cast<double>(idxs.size());
    weight_total += idxs.size();
  }
  if (weight_total > 0) rep.gauc = weighted / static_cast<double>(weight_total);
  return rep;
}

}  // namespace macrograph
