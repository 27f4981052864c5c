#include "gfair/baselines.h"

#include <random>
#include <stdexcept>

#include "gfair/fast_compute.h"
#include "gfair/seeds.h"

namespace gfair {

BaselineResult random_attack(const Graph& graph, int budget, std::uint64_t seed) {
  if (budget < 0) throw std::invalid_argument("random attack: negative budget");
  BaselineResult out{graph, {}};
  const int n = graph.num_nodes();
  if (budget == 0) return out;
  auto rng = make_rng(seed, "baseline/random");
  std::uniform_int_distribution<int> node(0, n - 1);
  PairSet used;
  for (int t = 0; t < budget; ++t) {
    std::optional<NodePair> pick;
    // Rejection sampling is uniform over the feasible pairs; fall back to
    // enumeration when feasible pairs are scarce.
    for (int attempt = 0; attempt < 1000 && !pick; ++attempt) {
      const int a = node(rng), b = node(rng);
      if (a == b) continue;
      const NodePair p = canonical_pair(a, b);
      if (used.contains(p) || !flip_is_feasible(out.poisoned, p.u, p.v)) continue;
      pick = p;
    }
    if (!pick) {
      const std::vector<NodePair> pool = feasible_pairs(out.poisoned, used);
      if (pool.empty()) {
        throw std::runtime_error("random attack: fewer feasible flips than the budget");
      }
      std::uniform_int_distribution<std::size_t> idx(0, pool.size() - 1);
      pick = pool[idx(rng)];
    }
    const EdgeFlip flip = make_flip(out.poisoned, pick->u, pick->v, t);
    out.poisoned.toggle_edge(pick->u, pick->v);
    used.insert(*pick);
    out.flips.push_back(flip);
  }
  return out;
}

BaselineResult fagnn_attack(const Graph& graph, int budget, std::uint64_t seed) {
  if (budget < 0) throw std::invalid_argument("fa-gnn attack: negative budget");
  std::vector<NodePair> pool;
  const int n = graph.num_nodes();
  for (int u = 0; u < n; ++u) {
    if (!graph.label(u)) continue;
    for (int v = u + 1; v < n; ++v) {
      if (!graph.label(v) || graph.has_edge(u, v)) continue;
      if (classify_edge_group(graph, u, v) == EdgeGroup::kDD) pool.push_back({u, v});
    }
  }
  if (static_cast<int>(pool.size()) < budget) {
    throw std::runtime_error("fa-gnn attack: not enough non-edges across label and group");
  }
  auto rng = make_rng(seed, "baseline/fagnn");
  // Partial Fisher-Yates: the first `budget` entries are a uniform sample.
  for (int t = 0; t < budget; ++t) {
    std::uniform_int_distribution<std::size_t> idx(t, pool.size() - 1);
    std::swap(pool[t], pool[idx(rng)]);
  }
  BaselineResult out{graph, {}};
  for (int t = 0; t < budget; ++t) {
    out.poisoned.toggle_edge(pool[t].u, pool[t].v);
    out.flips.push_back({pool[t].u, pool[t].v, FlipKind::kAdd, t});
  }
  return out;
}

AttackResult greedy_unconstrained_attack(const Graph& graph,
                                         const AttackConfig& config,
                                         const std::optional<SurrogateModel>& pretrained) {
  AttackConfig c = config;
  c.scoring = ScoringRule::kUnconstrained;
  c.utility = UtilityBudget::unlimited();
  return run_attack(graph, c, pretrained);
}

}  // namespace gfair
