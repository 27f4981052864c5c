#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gfair/attack.h"
#include "gfair/graph.h"

namespace gfair {

struct BaselineResult {
  Graph poisoned;
  std::vector<EdgeFlip> flips;
};

// `budget` distinct feasible flips, each drawn uniformly among the pairs that
// are feasible on the current graph. Throws std::runtime_error when the
// feasible pairs run out first.
BaselineResult random_attack(const Graph& graph, int budget, std::uint64_t seed);

// `budget` distinct additions between nodes with different labels and
// different sensitive values. Throws std::runtime_error when too few such
// non-edges exist.
BaselineResult fagnn_attack(const Graph& graph, int budget, std::uint64_t seed);

// The greedy attack with plain objective-gain scoring and no utility budget.
AttackResult greedy_unconstrained_attack(
    const Graph& graph, const AttackConfig& config,
    const std::optional<SurrogateModel>& pretrained = std::nullopt);

}  // namespace gfair
