// Small graphs and brute-force oracles shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfair/graph.h"
#include "gfair/surrogate.h"

namespace gfair::testing {

inline Graph make_graph(int n, const std::vector<NodePair>& edges, const RowMatrix& x,
                        const std::vector<int>& labels, const std::vector<int>& sensitive,
                        const std::vector<Split>& split) {
  std::vector<std::optional<int>> y(labels.begin(), labels.end());
  return Graph(n, edges, x, y, sensitive, split);
}

// Erdos-Renyi graph with Gaussian features. Nodes alternate sensitive groups;
// roughly half are train, a fifth val, the rest test, and both groups appear
// in train and test.
inline Graph random_graph(int n, double avg_degree, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double p = avg_degree / (n - 1);
  std::vector<NodePair> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (unit(rng) < p) edges.push_back({u, v});
    }
  }
  RowMatrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < d; ++f) x(i, f) = normal(rng);
  }
  std::vector<int> labels(n), sensitive(n);
  std::vector<Split> split(n);
  for (int i = 0; i < n; ++i) {
    sensitive[i] = i % 2;
    labels[i] = unit(rng) < 0.5 ? 1 : 0;
    const int slot = (i / 2) % 10;
    split[i] = slot < 5 ? Split::kTrain : slot < 7 ? Split::kVal : Split::kTest;
  }
  return make_graph(n, edges, x, labels, sensitive, split);
}

// Dense D^-1 Â D^-1 Â X.
inline Eigen::MatrixXd dense_z(const Graph& g) {
  const int n = g.num_nodes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (const NodePair& e : g.edges()) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  const Eigen::VectorXd dinv = a.rowwise().sum().cwiseInverse();
  const Eigen::MatrixXd x = g.features();
  return dinv.asDiagonal() * a * dinv.asDiagonal() * a * x;
}

// Train cross-entropy from a full dense recompute.
inline double naive_train_loss(const Graph& g, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd logits = dense_z(g) * theta;
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    if (g.split(i) != Split::kTrain) continue;
    const double y = *g.label(i);
    const double s = 1.0 / (1.0 + std::exp(-logits[i]));
    const double p = std::clamp(s, 1e-12, 1.0 - 1e-12);
    sum += -(y * std::log(p) + (1 - y) * std::log(1 - p));
    ++count;
  }
  return sum / count;
}

// Test-set parity gap of hard predictions from a full dense recompute.
inline double naive_objective(const Graph& g, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd logits = dense_z(g) * theta;
  double pos[2] = {0, 0}, count[2] = {0, 0};
  for (int i = 0; i < g.num_nodes(); ++i) {
    if (g.split(i) != Split::kTest) continue;
    count[g.sensitive(i)] += 1;
    pos[g.sensitive(i)] += logits[i] >= 0.0 ? 1 : 0;
  }
  return std::abs(pos[0] / count[0] - pos[1] / count[1]);
}

// Greedy attack recomputed from scratch at every step: every feasible,
// not-yet-flipped pair is scored from dense loss differences, the best
// candidate within the utility budget wins (ties by canonical order), and a
// negative best score stops the search.
inline std::vector<NodePair> brute_force_greedy(Graph g, const Eigen::VectorXd& theta,
                                                int budget, bool constrained,
                                                double epsilon) {
  const double l0 = naive_train_loss(g, theta);
  std::set<NodePair> used;
  std::vector<NodePair> picks;
  for (int t = 0; t < budget; ++t) {
    const double l = naive_train_loss(g, theta);
    const double lf = naive_objective(g, theta);
    std::vector<NodePair> cand;
    std::vector<double> p, q, l_after;
    for (int u = 0; u < g.num_nodes(); ++u) {
      for (int v = u + 1; v < g.num_nodes(); ++v) {
        if (used.count({u, v}) || !flip_is_feasible(g, u, v)) continue;
        const Graph f = flip_edge(g, u, v);
        cand.push_back({u, v});
        l_after.push_back(naive_train_loss(f, theta));
        p.push_back(l_after.back() - l);
        q.push_back(naive_objective(f, theta) - lf);
      }
    }
    if (cand.empty()) break;
    double c = 0.0;
    if (constrained) {
      double pq = 0.0, pp = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        pq += p[k] * q[k];
        pp += p[k] * p[k];
      }
      c = pp > 0.0 ? pq / pp : 0.0;
    }
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      const double score = q[k] - c * std::abs(p[k]);
      if (score < 0.0 || std::abs(l_after[k] - l0) > epsilon) continue;
      if (!best || score > best_score) {
        best = k;
        best_score = score;
      }
    }
    if (!best) break;
    picks.push_back(cand[*best]);
    used.insert(cand[*best]);
    g = flip_edge(g, cand[*best].u, cand[*best].v);
  }
  return picks;
}

inline bool connected(int n, const std::vector<NodePair>& edges) {
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const NodePair& e : edges) parent[find(e.u)] = find(e.v);
  for (int i = 1; i < n; ++i) {
    if (find(i) != find(0)) return false;
  }
  return true;
}

// `count` distinct connected 6-node graphs drawn from the 2^15 edge masks,
// sharing one set of node attributes. Nodes 0,1 are train; 2..5 are test.
inline std::vector<Graph> connected_six_node_graphs(int count, std::uint64_t seed) {
  constexpr int n = 6;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix x(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < 3; ++f) x(i, f) = normal(rng);
  }
  const std::vector<int> labels = {0, 1, 1, 0, 1, 0};
  const std::vector<int> sensitive = {0, 1, 0, 1, 0, 1};
  const std::vector<Split> split = {Split::kTrain, Split::kTrain, Split::kTest,
                                    Split::kTest,  Split::kTest,  Split::kTest};
  std::vector<NodePair> all;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) all.push_back({u, v});
  }
  std::uniform_int_distribution<int> mask_dist(0, (1 << 15) - 1);
  std::set<int> seen;
  std::vector<Graph> out;
  while (static_cast<int>(out.size()) < count) {
    const int mask = mask_dist(rng);
    if (!seen.insert(mask).second) continue;
    std::vector<NodePair> edges;
    for (int b = 0; b < 15; ++b) {
      if (mask & (1 << b)) edges.push_back(all[b]);
    }
    if (!connected(n, edges)) continue;
    out.push_back(make_graph(n, edges, x, labels, sensitive, split));
  }
  return out;
}

// Fresh directory under the system temp path.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gfair-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace gfair::testing
