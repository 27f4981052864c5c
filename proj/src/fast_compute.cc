#include "gfair/fast_compute.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace gfair {
namespace {

struct Membership {
  int node;
  bool in_u;
  bool in_v;
};

// Merge of the closed neighborhoods of u and v, sorted by node id.
std::vector<Membership> merged_neighborhood(const Graph& graph, int u, int v) {
  std::vector<int> nu = graph.neighbors(u);
  nu.insert(std::lower_bound(nu.begin(), nu.end(), u), u);
  std::vector<int> nv = graph.neighbors(v);
  nv.insert(std::lower_bound(nv.begin(), nv.end(), v), v);
  std::vector<Membership> out;
  out.reserve(nu.size() + nv.size());
  std::size_t a = 0, b = 0;
  while (a < nu.size() || b < nv.size()) {
    if (b == nv.size() || (a < nu.size() && nu[a] < nv[b])) {
      out.push_back({nu[a++], true, false});
    } else if (a == nu.size() || nv[b] < nu[a]) {
      out.push_back({nv[b++], false, true});
    } else {
      out.push_back({nu[a], true, true});
      ++a;
      ++b;
    }
  }
  return out;
}

bool removal_infeasible(const Graph& graph, int u, int v) {
  return graph.has_edge(u, v) && (graph.degree(u) <= 1 || graph.degree(v) <= 1);
}

}  // namespace

FlipDelta incremental_flip_z(const Graph& graph, const AggregatedFeatures& zf,
                             int u, int v) {
  const NodePair p = canonical_pair(u, v);
  u = p.u;
  v = p.v;
  const bool removing = graph.has_edge(u, v);
  if (removing && (zf.dhat[u] <= 2 || zf.dhat[v] <= 2)) {
    throw std::invalid_argument("infeasible flip: removal would leave a singleton");
  }
  const RowMatrix& X = graph.features();
  const double sgn = removing ? -1.0 : 1.0;
  const double du = zf.dhat[u], dv = zf.dhat[v];
  const double du_new = du + sgn, dv_new = dv + sgn;
  const Eigen::RowVectorXd ax_u_new = zf.AX.row(u) + sgn * X.row(v);
  const Eigen::RowVectorXd ax_v_new = zf.AX.row(v) + sgn * X.row(u);

  FlipDelta delta;
  delta.u = u;
  delta.v = v;
  delta.kind = removing ? FlipKind::kRemove : FlipKind::kAdd;
  const std::vector<Membership> rows = merged_neighborhood(graph, u, v);
  delta.touched_rows.reserve(rows.size());
  delta.new_rows.resize(static_cast<Eigen::Index>(rows.size()), X.cols());

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r].node;
    delta.touched_rows.push_back(i);
    auto out = delta.new_rows.row(static_cast<Eigen::Index>(r));
    if (i == u || i == v) {
      // Endpoint rows: the degree and the self term change.
      const int j = i == u ? v : u;
      const double d = zf.dhat[i];
      const double dj = zf.dhat[j];
      const double d_new = d + sgn;
      const Eigen::RowVectorXd& ax_i_new = i == u ? ax_u_new : ax_v_new;
      const Eigen::RowVectorXd& ax_j_new = i == u ? ax_v_new : ax_u_new;
      if (!removing) {
        out = d / d_new * (zf.Z.row(i) - zf.AX.row(i) / (d * d)) +
              ax_i_new / (d_new * d_new) + ax_j_new / (d_new * (dj + 1.0));
      } else {
        out = d / d_new *
                  (zf.Z.row(i) - zf.AX.row(i) / (d * d) -
                   zf.AX.row(j) / (d * dj)) +
              ax_i_new / (d_new * d_new);
      }
    } else {
      // Neighbor rows: only the u and/or v terms of the sum change.
      const double di = zf.dhat[i];
      out = zf.Z.row(i);
      if (rows[r].in_u) {
        out -= zf.AX.row(u) / (di * du) - ax_u_new / (di * du_new);
      }
      if (rows[r].in_v) {
        out -= zf.AX.row(v) / (di * dv) - ax_v_new / (di * dv_new);
      }
    }
  }
  return delta;
}

FlipDelta commit_flip(Graph& graph, AggregatedFeatures& zf, int u, int v) {
#ifndef NDEBUG
  const CacheChecksum before = cache_checksum(zf);
  if (before.dhat_sum != 2L * graph.num_edges() + graph.num_nodes()) {
    throw std::logic_error("commit_flip: cache checksum mismatch");
  }
#endif
  FlipDelta delta = incremental_flip_z(graph, zf, u, v);
  const double sgn = delta.kind == FlipKind::kAdd ? 1.0 : -1.0;
  const RowMatrix& X = graph.features();
  for (std::size_t r = 0; r < delta.touched_rows.size(); ++r) {
    zf.Z.row(delta.touched_rows[r]) = delta.new_rows.row(static_cast<Eigen::Index>(r));
  }
  zf.AX.row(delta.u) += sgn * X.row(delta.v);
  zf.AX.row(delta.v) += sgn * X.row(delta.u);
  zf.dhat[delta.u] += static_cast<int>(sgn);
  zf.dhat[delta.v] += static_cast<int>(sgn);
  graph.toggle_edge(delta.u, delta.v);
#ifndef NDEBUG
  const CacheChecksum after = cache_checksum(zf);
  if (after.dhat_sum != 2L * graph.num_edges() + graph.num_nodes() ||
      !std::isfinite(after.z_norm)) {
    throw std::logic_error("commit_flip: cache checksum mismatch after update");
  }
#endif
  return delta;
}

CacheChecksum cache_checksum(const AggregatedFeatures& zf) {
  CacheChecksum c;
  for (int d : zf.dhat) c.dhat_sum += d;
  c.z_norm = zf.Z.norm();
  return c;
}

double cache_discrepancy(const Graph& graph, const AggregatedFeatures& zf) {
  const AggregatedFeatures fresh = aggregate(graph);
  double worst = (fresh.Z - zf.Z).cwiseAbs().maxCoeff();
  worst = std::max(worst, (fresh.AX - zf.AX).cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < fresh.dhat.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(fresh.dhat[i] - zf.dhat[i])));
  }
  return worst;
}

std::vector<double> confidence_deficits(const Eigen::VectorXd& logits) {
  const double m = logits.size() ? logits.cwiseAbs().maxCoeff() : 0.0;
  std::vector<double> out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) out[i] = m - std::abs(logits[i]);
  return out;
}

double importance_score(const Graph& graph, const std::vector<double>& deficits,
                        int u, int v) {
  double sum = 0.0;
  for (const Membership& m : merged_neighborhood(graph, u, v)) sum += deficits[m.node];
  return sum;
}

double importance_score(const Graph& graph, const Eigen::VectorXd& logits,
                        int u, int v) {
  return importance_score(graph, confidence_deficits(logits), u, v);
}

std::vector<NodePair> feasible_pairs(const Graph& graph, const PairSet& excluded) {
  std::vector<NodePair> out;
  const int n = graph.num_nodes();
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (excluded.contains({u, v}) || removal_infeasible(graph, u, v)) continue;
      out.push_back({u, v});
    }
  }
  return out;
}

std::vector<NodePair> build_candidates(const Graph& graph,
                                       const Eigen::VectorXd& logits,
                                       CandidateLimit limit,
                                       const PairSet& excluded,
                                       WorkCounters* counters) {
  if (limit.count && *limit.count < 1) {
    throw std::invalid_argument("candidate limit must be >= 1");
  }
  if (!limit.count) {
    std::vector<NodePair> all = feasible_pairs(graph, excluded);
    if (counters) counters->pairs_ranked += static_cast<long>(all.size());
    if (all.empty()) throw std::runtime_error("no feasible pairs remain");
    return all;
  }

  const int n = graph.num_nodes();
  const std::vector<double> deficit = confidence_deficits(logits);
  // Neighborhood sums bound the importance from above; overlap only lowers it.
  std::vector<double> hood(n);
  for (int i = 0; i < n; ++i) {
    double s = deficit[i];
    for (int j : graph.neighbors(i)) s += deficit[j];
    hood[i] = s;
  }
  struct Bounded {
    double bound;
    NodePair pair;
  };
  std::vector<Bounded> ranked;
  ranked.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (excluded.contains({u, v}) || removal_infeasible(graph, u, v)) continue;
      ranked.push_back({hood[u] + hood[v], {u, v}});
    }
  }
  if (counters) counters->pairs_ranked += static_cast<long>(ranked.size());
  if (ranked.empty()) throw std::runtime_error("no feasible pairs remain");
  std::sort(ranked.begin(), ranked.end(), [](const Bounded& a, const Bounded& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.pair < b.pair;
  });

  struct Scored {
    double rho;
    NodePair pair;
  };
  // `better` orders by importance descending, then canonical pair.
  auto better = [](const Scored& a, const Scored& b) {
    if (a.rho != b.rho) return a.rho > b.rho;
    return a.pair < b.pair;
  };
  // Heap top is the worst kept candidate.
  std::priority_queue<Scored, std::vector<Scored>, decltype(better)> heap(better);
  const std::size_t a = static_cast<std::size_t>(*limit.count);
  for (const Bounded& b : ranked) {
    if (heap.size() == a) {
      const double worst = heap.top().rho;
      // Slack guards against the bound and the exact sum rounding apart.
      if (b.bound < worst - 1e-9 * (1.0 + std::abs(worst))) break;
    }
    const Scored s{importance_score(graph, deficit, b.pair.u, b.pair.v), b.pair};
    if (counters) ++counters->importance_evaluated;
    if (heap.size() < a) {
      heap.push(s);
    } else if (better(s, heap.top())) {
      heap.pop();
      heap.push(s);
    }
  }
  std::vector<Scored> kept;
  kept.reserve(heap.size());
  while (!heap.empty()) {
    kept.push_back(heap.top());
    heap.pop();
  }
  std::sort(kept.begin(), kept.end(), better);
  std::vector<NodePair> out;
  out.reserve(kept.size());
  for (const Scored& s : kept) out.push_back(s.pair);
  return out;
}

}  // namespace gfair
