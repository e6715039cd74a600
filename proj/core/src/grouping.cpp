#include "macrograph/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace macrograph {

BehaviorEmbedding behavior_embedding(const MicroGraph& g, NodeRef v) {
  auto adj = g.adjacency(v);
  BehaviorEmbedding e;
  if (adj.empty()) return e;
  e.indices.assign(adj.begin(), adj.end());
  e.value = 1.0 / std::sqrt(static_cast<double>(adj.size()));
  return e;
}

std::vector<BehaviorEmbedding> behavior_embeddings(const MicroGraph& g, Side side) {
  std::uint32_t n = side == Side::user ? g.user_count() : g.item_count();
  std::vector<BehaviorEmbedding> out(n);
  for (std::uint32_t v = 0; v < n; ++v) out[v] = behavior_embedding(g, {side, v});
  return out;
}

namespace {

Centroid densify(const BehaviorEmbedding& e, std::size_t dim) {
  Centroid c(dim, 0.0);
  for (std::uint32_t j : e.indices) {
    if (j >= dim) throw UsageError("embedding index exceeds declared dimension");
    c[j] = e.value;
  }
  return c;
}

double sq_norm(const Centroid& c) {
  double s = 0.0;
  for (double x : c) s += x * x;
  return s;
}

// ||b - mu||^2 via the expansion; b has unit norm unless empty.
double sq_dist(const BehaviorEmbedding& e, const Centroid& mu, double mu_sq) {
  double dot = 0.0;
  for (std::uint32_t j : e.indices) dot += mu[j];
  dot *= e.value;
  double b_sq = e.value * e.value * static_cast<double>(e.indices.size());
  double d = b_sq - 2.0 * dot + mu_sq;
  return d > 0.0 ? d : 0.0;  // clip the tiny negatives roundoff can produce
}

}  // namespace

std::vector<Centroid> init_centroids(const std::vector<BehaviorEmbedding>& embs,
                                     std::uint32_t K, std::size_t dim, Rng& rng) {
  if (K == 0) throw UsageError("init_centroids: K must be >= 1");
  std::vector<std::size_t> candidates;
  for (std::size_t v = 0; v < embs.size(); ++v)
    if (!embs[v].empty()) candidates.push_back(v);
  if (K > candidates.size())
    throw UsageError("init_centroids: K=" + std::to_string(K) + " exceeds the " +
                     std::to_string(candidates.size()) + " non-isolated nodes");
  auto picks = sample_without_replacement(candidates.size(), K, rng);
  std::vector<Centroid> out;
  out.reserve(K);
  for (std::size_t p : picks) out.push_back(densify(embs[candidates[p]], dim));
  return out;
}

std::vector<Centroid> init_centroids(const std::vector<BehaviorEmbedding>& embs,
                                     std::uint32_t K, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return init_centroids(embs, K, dim, rng);
}

std::vector<std::uint32_t> assign(const std::vector<BehaviorEmbedding>& embs,
                                  const std::vector<Centroid>& centroids) {
  if (centroids.empty()) throw UsageError("assign: no centroids");
  const std::uint32_t K = static_cast<std::uint32_t>(centroids.size());
  std::vector<double> mu_sq(K);
  for (std::uint32_t k = 0; k < K; ++k) mu_sq[k] = sq_norm(centroids[k]);

  std::vector<std::uint32_t> asg(embs.size());
  for (std::size_t v = 0; v < embs.size(); ++v) {
    if (embs[v].empty()) {
      asg[v] = K;  // reserved isolated bucket
      continue;
    }
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t k = 0; k < K; ++k) {
      double d = sq_dist(embs[v], centroids[k], mu_sq[k]);
      if (d < best_d) {  // strict: ties stay with the lowest index
        best_d = d;
        best = k;
      }
    }
    asg[v] = best;
  }
  return asg;
}

std::vector<Centroid> update_centroids(const std::vector<BehaviorEmbedding>& embs,
                                       const std::vector<std::uint32_t>& assignments,
                                       const std::vector<Centroid>& previous) {
  if (assignments.size() != embs.size())
    throw UsageError("update_centroids: assignment count mismatch");
  const std::uint32_t K = static_cast<std::uint32_t>(previous.size());
  const std::size_t dim = previous.empty() ? 0 : previous[0].size();
  std::vector<Centroid> out(K, Centroid(dim, 0.0));
  std::vector<std::size_t> counts(K, 0);
  for (std::size_t v = 0; v < embs.size(); ++v) {
    std::uint32_t k = assignments[v];
    if (k == K) continue;  // isolated
    if (k > K) throw UsageError("update_centroids: assignment out of range");
    for (std::uint32_t j : embs[v].indices) out[k][j] += embs[v].value;
    ++counts[k];
  }
  for (std::uint32_t k = 0; k < K; ++k) {
    if (counts[k] == 0) {
      out[k] = previous[k];  // empty cluster keeps its centroid
      continue;
    }
    double inv = 1.0 / static_cast<double>(counts[k]);
    for (double& x : out[k]) x *= inv;
  }
  return out;
}

double grouping_objective(const std::vector<BehaviorEmbedding>& embs,
                          const std::vector<std::uint32_t>& assignments,
                          const std::vector<Centroid>& centroids) {
  if (assignments.size() != embs.size())
    throw UsageError("objective: assignment count mismatch");
  const std::uint32_t K = static_cast<std::uint32_t>(centroids.size());
  std::vector<double> mu_sq(K);
  for (std::uint32_t k = 0; k < K; ++k) mu_sq[k] = sq_norm(centroids[k]);
  double J = 0.0;
  for (std::size_t v = 0; v < embs.size(); ++v) {
    std::uint32_t k = assignments[v];
    if (k == K) continue;
    if (k > K) throw UsageError("objective: assignment out of range");
    J += std::sqrt(sq_dist(embs[v], centroids[k], mu_sq[k]));
  }
  return J;
}

namespace {

struct RunResult {
  std::vector<std::uint32_t> asg;
  std::vector<Centroid> cents;
  double J = std::numeric_limits<double>::infinity();
  std::uint32_t iterations = 0;
  std::vector<double> curve;
};

RunResult run_once(const std::vector<BehaviorEmbedding>& embs, std::uint32_t K,
                   std::size_t dim, Rng& rng, const GroupingOptions& opt) {
  RunResult r;
  std::vector<Centroid> cents = init_centroids(embs, K, dim, rng);
  double J_prev = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> prev_asg;
  for (std::uint32_t iter = 1; iter <= opt.max_iter; ++iter) {
    auto asg = assign(embs, cents);
    auto new_cents = update_centroids(embs, asg, cents);
    double J = grouping_objective(embs, asg, new_cents);
    if (J > J_prev) break;  // the mean update overshot the unsquared objective: roll back
    r.asg = std::move(asg);
    r.cents = std::move(new_cents);
    r.J = J;
    r.iterations = iter;
    r.curve.push_back(J);
    cents = r.cents;
    bool stable = (prev_asg == r.asg);
    prev_asg = r.asg;
    if (J == 0.0 || stable) break;
    if (std::isfinite(J_prev)) {
      double rel = (J_prev - J) / J_prev;
      if (rel < opt.tol) {
        J_prev = J;
        break;
      }
    }
    J_prev = J;
  }
  return r;
}

}  // namespace

Grouping group(const std::vector<BehaviorEmbedding>& embs, std::uint32_t K,
               std::size_t dim, std::uint64_t seed, const GroupingOptions& opt) {
  if (opt.max_iter < 1) throw UsageError("group: max_iter must be >= 1");
  if (opt.tol < 0) throw UsageError("group: tol must be >= 0");
  if (opt.restarts < 1) throw UsageError("group: restarts must be >= 1");
  Rng rng(seed);
  RunResult best;
  for (std::uint32_t r = 0; r < opt.restarts; ++r) {
    RunResult run = run_once(embs, K, dim, rng, opt);
    if (run.J < best.J) best = std::move(run);
  }
  Grouping g;
  g.assignments = std::move(best.asg);
  g.centroids = std::move(best.cents);
  g.K = K;
  g.objective = best.J;
  g.iterations = best.iterations;
  g.seed = seed;
  g.mode = "kmeans";
  g.objective_curve = std::move(best.curve);
  return g;
}

Grouping group_by_category(const std::vector<BehaviorEmbedding>& embs,
                           const std::vector<std::uint32_t>& categories,
                           std::uint32_t K, std::size_t dim) {
  if (K == 0) throw UsageError("group_by_category: K must be >= 1");
  if (categories.size() != embs.size())
    throw UsageError("group_by_category: category count mismatch");
  Grouping g;
  g.K = K;
  g.mode = "category";
  g.assignments.resize(embs.size());
  for (std::size_t v = 0; v < embs.size(); ++v) {
    if (embs[v].empty()) {
      g.assignments[v] = K;
      continue;
    }
    if (categories[v] >= K)
      throw UsageError("group_by_category: category index out of range for node " +
                       std::to_string(v));
    g.assignments[v] = categories[v];
  }
  g.centroids = update_centroids(embs, g.assignments,
                                 std::vector<Centroid>(K, Centroid(dim, 0.0)));
  g.objective = grouping_objective(embs, g.assignments, g.centroids);
  g.iterations = 0;
  g.objective_curve = {g.objective};
  return g;
}

}  // namespace macrograph
