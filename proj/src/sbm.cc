#include "gfair/sbm.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gfair/seeds.h"

namespace gfair {
namespace {

void validate(const SbmOptions& o) {
  if (o.num_nodes < 8) throw std::invalid_argument("sbm: need at least 8 nodes");
  if (o.feature_dim < 1) throw std::invalid_argument("sbm: feature_dim must be >= 1");
  if (!(o.homophily >= 0.0 && o.homophily <= 1.0)) {
    throw std::invalid_argument("sbm: homophily must lie in [0,1]");
  }
  if (!(o.label_noise >= 0.0 && o.label_noise <= 1.0)) {
    throw std::invalid_argument("sbm: label_noise must lie in [0,1]");
  }
  if (!(o.average_degree > 0.0)) {
    throw std::invalid_argument("sbm: average_degree must be positive");
  }
  if (!(o.label_homophily >= 0.0 && o.label_homophily < 1.0)) {
    throw std::invalid_argument("sbm: label_homophily must lie in [0,1)");
  }
}

Eigen::VectorXd random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace

SbmEdgeProbabilities sbm_edge_probabilities(const SbmOptions& o) {
  validate(o);
  const double n = o.num_nodes;
  const double b0 = (o.num_nodes + 1) / 2;
  const double b1 = o.num_nodes / 2;
  const double pairs_in = b0 * (b0 - 1) / 2 + b1 * (b1 - 1) / 2;
  const double pairs_out = b0 * b1;
  const double expected_edges = o.average_degree * n / 2;
  SbmEdgeProbabilities p;
  p.intra = std::min(1.0, o.homophily * expected_edges / pairs_in);
  p.inter = std::min(1.0, (1.0 - o.homophily) * expected_edges / pairs_out);
  const double in = p.intra * pairs_in;
  const double out = p.inter * pairs_out;
  p.expected_intra_fraction = in + out > 0 ? in / (in + out) : 0.0;
  return p;
}

Graph generate_sbm(const SbmOptions& o) {
  const SbmEdgeProbabilities prob = sbm_edge_probabilities(o);
  const int n = o.num_nodes;
  const int d = o.feature_dim;
  const int block0 = (n + 1) / 2;

  std::vector<int> sensitive(n);
  for (int i = 0; i < n; ++i) sensitive[i] = i < block0 ? 0 : 1;

  auto attr_rng = make_rng(o.seed, "sbm/attributes");
  const Eigen::VectorXd label_dir = random_unit(attr_rng, d);
  // The group shift leans toward the label direction so the groups differ in
  // their base rates.
  Eigen::VectorXd shift_dir = label_dir + random_unit(attr_rng, d);
  if (shift_dir.norm() == 0.0) shift_dir = label_dir;
  shift_dir /= shift_dir.norm();

  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix features(n, d);
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < d; ++f) features(i, f) = normal(attr_rng);
    if (sensitive[i] == 1) {
      features.row(i) += o.sensitive_shift * shift_dir.transpose();
    }
  }

  auto label_rng = make_rng(o.seed, "sbm/labels");
  std::bernoulli_distribution flip_label(o.label_noise);
  std::vector<std::optional<int>> labels(n);
  for (int i = 0; i < n; ++i) {
    int y = features.row(i).dot(label_dir.transpose()) >= 0.0 ? 1 : 0;
    if (flip_label(label_rng)) y = 1 - y;
    labels[i] = y;
  }

  // Per block pair (00, 11, 01): probabilities for same- and different-label
  // node pairs, keeping the pair's expected edge count at the base rate.
  double same_count[3] = {0, 0, 0}, diff_count[3] = {0, 0, 0};
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const int bp = sensitive[u] == sensitive[v] ? sensitive[u] : 2;
      (*labels[u] == *labels[v] ? same_count : diff_count)[bp] += 1;
    }
  }
  double p_same[3], p_diff[3];
  const double lam = o.label_homophily;
  for (int bp = 0; bp < 3; ++bp) {
    const double base = bp == 2 ? prob.inter : prob.intra;
    const double pairs = same_count[bp] + diff_count[bp];
    const double weight = (1 + lam) * same_count[bp] + (1 - lam) * diff_count[bp];
    const double k = weight > 0 ? pairs / weight : 1.0;
    p_same[bp] = std::min(1.0, base * (1 + lam) * k);
    p_diff[bp] = std::min(1.0, base * (1 - lam) * k);
  }

  auto edge_rng = make_rng(o.seed, "sbm/edges");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NodePair> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const int bp = sensitive[u] == sensitive[v] ? sensitive[u] : 2;
      const double p = *labels[u] == *labels[v] ? p_same[bp] : p_diff[bp];
      // Draw unconditionally so the stream layout does not depend on p.
      const double r = unit(edge_rng);
      if (r < p) edges.push_back({u, v});
    }
  }

  auto split_rng = make_rng(o.seed, "sbm/split");
  std::vector<Split> split(n, Split::kTest);
  for (int block = 0; block < 2; ++block) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if (sensitive[i] == block) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), split_rng);
    const int size = static_cast<int>(members.size());
    const int train = size / 2;
    const int val = size / 5;
    for (int k = 0; k < size; ++k) {
      split[members[k]] = k < train ? Split::kTrain
                          : k < train + val ? Split::kVal
                                            : Split::kTest;
    }
  }

  return Graph(n, edges, std::move(features), std::move(labels),
               std::move(sensitive), std::move(split));
}

Graph generate_sbm(int num_nodes, int feature_dim, double homophily,
                   double label_noise, std::uint64_t seed) {
  SbmOptions o;
  o.num_nodes = num_nodes;
  o.feature_dim = feature_dim;
  o.homophily = homophily;
  o.label_noise = label_noise;
  o.seed = seed;
  return generate_sbm(o);
}

}  // namespace gfair
