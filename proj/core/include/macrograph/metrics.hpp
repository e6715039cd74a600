#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace macrograph {

// Mann-Whitney AUC with midrank tie handling: P(random positive outscores a
// random negative, ties half).  Absent when only one class is present.
std::optional<double> auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Impression-weighted mean of per-user AUC over users that have both classes;
// absent when no user qualifies.
std::optional<double> gauc(const std::vector<double>& scores, const std::vector<int>& labels,
                           const std::vector<std::uint32_t>& user_ids);

// Mean clamped binary cross-entropy (clamp 1e-7, matching training).
double logloss(const std::vector<double>& scores, const std::vector<int>& labels);

struct PerUserAuc {
  std::uint32_t user;
  double auc;
  std::size_t impressions;
};

struct EvalReport {
  std::optional<double> auc;
  std::optional<double> gauc;
  double logloss = 0.0;
  std::vector<PerUserAuc> per_user;  // eligible users only
  std::size_t examples = 0;
  std::size_t positives = 0;
};

EvalReport evaluate_scores(const std::vector<double>& scores, const std::vector<int>& labels,
                           const std::vector<std::uint32_t>& user_ids);

}  // namespace macrograph
