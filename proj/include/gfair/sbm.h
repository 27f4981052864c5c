#pragma once

#include <cstdint>

#include "gfair/graph.h"

namespace gfair {

// Two-block stochastic block model whose blocks are the sensitive groups.
//
// The expected edge count is average_degree * n / 2, of which a `homophily`
// share falls inside blocks. Attributes are standard normal with group 1
// shifted by `sensitive_shift` along a random direction that leans toward the
// label direction; labels threshold a random linear function of the
// attributes and are then flipped with
// probability `label_noise`. Within each block pair, same-label pairs are
// (1 + label_homophily) / (1 - label_homophily) times as likely to be linked
// as different-label pairs, rescaled so the pair's expected edge count is
// unchanged. Each block is split 50/20/30 into train/val/test.
struct SbmOptions {
  int num_nodes = 500;
  int feature_dim = 16;
  double homophily = 0.8;
  double label_noise = 0.1;
  std::uint64_t seed = 0;
  double average_degree = 8.0;
  double sensitive_shift = 1.0;
  double label_homophily = 0.5;  // in [0, 1)
};

Graph generate_sbm(const SbmOptions& options);

Graph generate_sbm(int num_nodes, int feature_dim, double homophily,
                   double label_noise, std::uint64_t seed);

struct SbmEdgeProbabilities {
  double intra = 0.0;
  double inter = 0.0;
  // Expected share of edges that join nodes of the same block.
  double expected_intra_fraction = 0.0;
};

SbmEdgeProbabilities sbm_edge_probabilities(const SbmOptions& options);

}  // namespace gfair
