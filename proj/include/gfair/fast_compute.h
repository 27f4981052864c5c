#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gfair/graph.h"
#include "gfair/surrogate.h"

namespace gfair {

// Rows of Z that change when (u,v) is flipped, with their new values. Every
// other row is unchanged.
struct FlipDelta {
  int u = 0;
  int v = 0;
  FlipKind kind = FlipKind::kAdd;
  std::vector<int> touched_rows;  // sorted
  RowMatrix new_rows;             // one row per touched row
};

// Closed-form row updates for flipping (u,v) against the current caches.
// Throws std::invalid_argument for u == v or an infeasible removal.
FlipDelta incremental_flip_z(const Graph& graph, const AggregatedFeatures& zf,
                             int u, int v);

// Applies the flip to the graph and every cache in place.
FlipDelta commit_flip(Graph& graph, AggregatedFeatures& zf, int u, int v);

// Cheap fingerprint of the caches: sum of dhat and Frobenius norm of Z.
struct CacheChecksum {
  long dhat_sum = 0;
  double z_norm = 0.0;
};
CacheChecksum cache_checksum(const AggregatedFeatures& zf);

// Max absolute difference between cached Z/AX/dhat and a full recompute.
double cache_discrepancy(const Graph& graph, const AggregatedFeatures& zf);

// Per-node confidence deficit M - |logit_i| with M = max_i |logit_i|.
std::vector<double> confidence_deficits(const Eigen::VectorXd& logits);

// Sum of deficits over N_u ∪ N_v (closed neighborhoods, union counted once).
double importance_score(const Graph& graph, const std::vector<double>& deficits,
                        int u, int v);
double importance_score(const Graph& graph, const Eigen::VectorXd& logits,
                        int u, int v);

// How many candidates to keep per round; nullopt keeps every feasible pair.
struct CandidateLimit {
  std::optional<long> count;

  static CandidateLimit all() { return {}; }
  static CandidateLimit top(long a) { return {a}; }
};

struct WorkCounters {
  long pairs_ranked = 0;          // pairs whose bound was considered
  long importance_evaluated = 0;  // exact importance scores computed
  long candidates_evaluated = 0;  // flips scored through the fast path
  long rows_updated = 0;          // Z rows produced by incremental updates

  WorkCounters& operator+=(const WorkCounters& o) {
    pairs_ranked += o.pairs_ranked;
    importance_evaluated += o.importance_evaluated;
    candidates_evaluated += o.candidates_evaluated;
    rows_updated += o.rows_updated;
    return *this;
  }
};

// Every unordered pair that is neither excluded nor an infeasible removal,
// in canonical order.
std::vector<NodePair> feasible_pairs(const Graph& graph, const PairSet& excluded);

// Top-a feasible pairs by importance, descending, ties by canonical order.
// With limit all() returns feasible_pairs(). Throws std::runtime_error when no
// feasible pair remains.
std::vector<NodePair> build_candidates(const Graph& graph,
                                       const Eigen::VectorXd& logits,
                                       CandidateLimit limit,
                                       const PairSet& excluded,
                                       WorkCounters* counters = nullptr);

}  // namespace gfair
