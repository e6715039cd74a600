#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "macrograph/micro_graph.hpp"
#include "macrograph/rng.hpp"

namespace macrograph {

// L2-normalized interaction row of one node.  All nonzeros of such a row are
// equal (binary row scaled by 1/sqrt(degree)), so a single value suffices.
// Isolated nodes get an empty embedding (norm 0).
struct BehaviorEmbedding {
  std::vector<std::uint32_t> indices;  // sorted counterpart ids
  double value = 0.0;                  // weight shared by-all nonzeros

  bool empty() const { return indices.empty(); }
};

BehaviorEmbedding behavior_embedding(const MicroGraph& g, NodeRef v);
// All nodes of one side; dim of the implied vectors = counterpart count.
std::vector<BehaviorEmbedding> behavior_embeddings(const MicroGraph& g, Side side);

using Centroid = std::vector<double>;  // dense, length = counterpart count

// Result of grouping one side into K macro nodes.  Isolated nodes carry the
// reserved assignment K (the "isolated bucket") and never join a centroid.
struct Grouping {
  std::vector<std::uint32_t> assignments;  // per node; in [0,K], K = isolated
  std::vector<Centroid> centroids;         // K of them
  std::uint32_t K = 0;
  double objective = 0.0;                  // sum of unsquared member-centroid distances
  std::uint32_t iterations = 0;
  std::uint64_t seed = 0;
  std::string mode = "kmeans";             // "kmeans" | "category"
  std::vector<double> objective_curve;     // J after each assign/update round

  std::uint32_t isolated_index() const { return K; }
};

// K distinct member embeddings chosen uniformly without replacement among the
// non-isolated nodes (materialized dense).  Errors when K is 0 or exceeds the
// number of non-isolated embeddings.
std::vector<Centroid> init_centroids(const std::vector<BehaviorEmbedding>& embs,
                                     std::uint32_t K, std::size_t dim, Rng& rng);
std::vector<Centroid> init_centroids(const std::vector<BehaviorEmbedding>& embs,
                                     std::uint32_t K, std::size_t dim, std::uint64_t seed);

// Nearest centroid per node (Euclidean), ties to the lowest index; isolated
// nodes -> K.
std::vector<std::uint32_t> assign(const std::vector<BehaviorEmbedding>& embs,
                                  const std::vector<Centroid>& centroids);

// Member means; a cluster that lost all members keeps its previous centroid.
std::vector<Centroid> update_centroids(const std::vector<BehaviorEmbedding>& embs,
                                       const std::vector<std::uint32_t>& assignments,
                                       const std::vector<Centroid>& previous);

// Sum over nodes of the *unsquared* Euclidean distance to the assigned
// centroid (the grouping objective takes a root per term).  Isolated nodes
// contribute nothing.
double grouping_objective(const std::vector<BehaviorEmbedding>& embs,
                          const std::vector<std::uint32_t>& assignments,
                          const std::vector<Centroid>& centroids);

struct GroupingOptions {
  std::uint32_t max_iter = 100;
  double tol = 1e-6;     // relative decrease of the objective
  std::uint32_t restarts = 10;  // best-of restarts; see README
};

// Alternate assign/update from a sampled initialization until the relative
// decrease of the objective falls below tol (or max_iter).  The recorded
// objective curve is non-increasing: a round that would raise the objective
// (possible because the mean update optimizes squared distance, the objective
// is unsquared) is rolled back and iteration stops.  Runs `restarts`
// independent initializations off one seeded stream and keeps the lowest
// final objective.
Grouping group(const std::vector<BehaviorEmbedding>& embs, std::uint32_t K,
               std::size_t dim, std::uint64_t seed, const GroupingOptions& opt = {});

// Item-side alternative: macro index = category of the node.  `categories`
// maps node id -> dense category index in [0,K); isolated nodes still go to
// the reserved bucket.  Centroids are member means, objective as usual.
Grouping group_by_category(const std::vector<BehaviorEmbedding>& embs,
                           const std::vector<std::uint32_t>& categories,
                           std::uint32_t K, std::size_t dim);

}  // namespace macrograph
