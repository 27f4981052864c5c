#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"

#include "gfair/fast_compute.h"
#include "support/fixtures.h"

using namespace gfair;
using gfair::testing::dense_z;
using gfair::testing::make_graph;
using gfair::testing::random_graph;

namespace {

std::vector<int> closed_union(const Graph& g, int u, int v) {
  std::set<int> s = {u, v};
  for (int w : g.neighbors(u)) s.insert(w);
  for (int w : g.neighbors(v)) s.insert(w);
  return {s.begin(), s.end()};
}

// Max |incremental - dense recompute| over all rows after the flip.
double flip_error(const Graph& g, const AggregatedFeatures& zf, int u, int v) {
  const FlipDelta d = incremental_flip_z(g, zf, u, v);
  Eigen::MatrixXd z = zf.Z;
  for (std::size_t k = 0; k < d.touched_rows.size(); ++k) {
    z.row(d.touched_rows[k]) = d.new_rows.row(static_cast<Eigen::Index>(k));
  }
  return (z - dense_z(flip_edge(g, u, v))).cwiseAbs().maxCoeff();
}

double brute_importance(const Graph& g, const Eigen::VectorXd& logits, int u, int v) {
  const double m = logits.cwiseAbs().maxCoeff();
  double sum = 0.0;
  for (int i : closed_union(g, u, v)) sum += m - std::abs(logits[i]);
  return sum;
}

Eigen::VectorXd random_logits(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd l(n);
  for (int i = 0; i < n; ++i) l[i] = normal(rng);
  return l;
}

}  // namespace

TEST_CASE("adding an edge between two isolated nodes") {
  RowMatrix x(2, 1);
  x << 1.0, 3.0;
  const Graph g = make_graph(2, {}, x, {0, 1}, {0, 1}, {Split::kTest, Split::kTest});
  const AggregatedFeatures zf = aggregate(g);
  const FlipDelta d = incremental_flip_z(g, zf, 0, 1);
  CHECK(d.kind == FlipKind::kAdd);
  CHECK(d.touched_rows == std::vector<int>{0, 1});
  CHECK(std::abs(d.new_rows(0, 0) - 2.0) <= 1e-12);
  CHECK(std::abs(d.new_rows(1, 0) - 2.0) <= 1e-12);
}

TEST_CASE("rows far from the flip are untouched") {
  // Path 0-1-2-3-4-5: flipping (0,1) leaves rows 3..5 alone.
  RowMatrix x(6, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  Graph g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}}, x, {0, 1, 0, 1, 0, 1},
                       {0, 1, 0, 1, 0, 1}, std::vector<Split>(6, Split::kTest));
  AggregatedFeatures zf = aggregate(g);
  const RowMatrix before = zf.Z;
  const FlipDelta d = incremental_flip_z(g, zf, 0, 2);
  CHECK(d.touched_rows == std::vector<int>{0, 1, 2, 3});
  commit_flip(g, zf, 0, 2);
  for (int r = 4; r < 6; ++r) CHECK((zf.Z.row(r).array() == before.row(r).array()).all());
}

TEST_CASE("incremental rows equal a full recompute for 500 flips") {
  const Graph g = random_graph(200, 8.0, 5, 77);
  const AggregatedFeatures zf = aggregate(g);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> node(0, 199);
  int adds = 0, removes = 0;
  double worst = 0.0;
  while (adds + removes < 500) {
    const int u = node(rng), v = node(rng);
    if (u == v || !flip_is_feasible(g, u, v)) continue;
    // Half of the draws target existing edges so removals are well covered.
    if ((adds + removes) % 2 == 0 && !g.has_edge(u, v)) continue;
    (g.has_edge(u, v) ? removes : adds)++;
    worst = std::max(worst, flip_error(g, zf, u, v));
    const FlipDelta d = incremental_flip_z(g, zf, u, v);
    CHECK(d.touched_rows == closed_union(g, u, v));
    CHECK(static_cast<int>(d.touched_rows.size()) <= zf.dhat[u] + zf.dhat[v]);
  }
  CHECK(removes >= 200);
  CHECK(worst <= 1e-9);
}

TEST_CASE("rows that change are exactly the touched rows") {
  const Graph g = random_graph(60, 4.0, 3, 5);
  const AggregatedFeatures zf = aggregate(g);
  for (auto [u, v] : {std::pair{0, 1}, std::pair{3, 40}, std::pair{10, 11}}) {
    if (!flip_is_feasible(g, u, v)) continue;
    const Eigen::MatrixXd after = dense_z(flip_edge(g, u, v));
    const FlipDelta d = incremental_flip_z(g, zf, u, v);
    std::vector<int> changed;
    for (int i = 0; i < 60; ++i) {
      if ((after.row(i) - Eigen::MatrixXd(zf.Z).row(i)).cwiseAbs().maxCoeff() > 1e-14) {
        changed.push_back(i);
      }
    }
    CHECK(changed == d.touched_rows);
  }
}

TEST_CASE("caches stay exact over 100 sequential commits") {
  Graph g = random_graph(200, 8.0, 5, 78);
  AggregatedFeatures zf = aggregate(g);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> node(0, 199);
  int commits = 0;
  while (commits < 100) {
    const int u = node(rng), v = node(rng);
    if (u == v || !flip_is_feasible(g, u, v)) continue;
    const std::vector<int> dhat_before = zf.dhat;
    const int delta = g.has_edge(u, v) ? -1 : 1;
    commit_flip(g, zf, u, v);
    for (int i = 0; i < 200; ++i) {
      CHECK(zf.dhat[i] - dhat_before[i] == (i == u || i == v ? delta : 0));
    }
    ++commits;
  }
  CHECK(cache_discrepancy(g, zf) <= 1e-9);
  CHECK((Eigen::MatrixXd(zf.Z) - dense_z(g)).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(cache_checksum(zf).dhat_sum == 2L * g.num_edges() + g.num_nodes());
}

TEST_CASE("commit followed by its inverse restores the caches") {
  Graph g = random_graph(50, 5.0, 3, 9);
  AggregatedFeatures zf = aggregate(g);
  const AggregatedFeatures original = zf;
  commit_flip(g, zf, 4, 30);
  commit_flip(g, zf, 4, 30);
  CHECK((zf.Z - original.Z).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((zf.AX - original.AX).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(zf.dhat == original.dhat);
}

TEST_CASE("infeasible removals are refused") {
  RowMatrix x = RowMatrix::Zero(3, 1);
  Graph g = make_graph(3, {{0, 1}, {1, 2}}, x, {0, 1, 0}, {0, 1, 0},
                       std::vector<Split>(3, Split::kTest));
  AggregatedFeatures zf = aggregate(g);
  CHECK_THROWS_AS(incremental_flip_z(g, zf, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(commit_flip(g, zf, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(incremental_flip_z(g, zf, 1, 1), std::invalid_argument);
}

TEST_CASE("importance score, hand fixture") {
  // Star 0-{1,2} plus edge 3-4. |logits| = 2, 1, 0.5, 1.5, 0 so M = 2.
  RowMatrix x = RowMatrix::Zero(5, 1);
  const Graph g = make_graph(5, {{0, 1}, {0, 2}, {3, 4}}, x, {0, 1, 0, 1, 0}, {0, 1, 0, 1, 0},
                             std::vector<Split>(5, Split::kTest));
  Eigen::VectorXd logits(5);
  logits << -2.0, 1.0, 0.5, -1.5, 0.0;
  // N_1 ∪ N_2 = {0,1,2}: 0 + 1 + 1.5.
  CHECK(importance_score(g, logits, 1, 2) == 2.5);
  CHECK(importance_score(g, logits, 2, 1) == 2.5);
  // N_1 ∪ N_3 = {0,1,3,4}: 0 + 1 + 0.5 + 2.
  CHECK(importance_score(g, logits, 1, 3) == 3.5);
  // N_0 ∪ N_4 = {0,1,2,3,4}: 0 + 1 + 1.5 + 0.5 + 2.
  CHECK(importance_score(g, logits, 0, 4) == 5.0);

  Eigen::VectorXd flat(5);
  flat << 3, -3, 3, -3, 3;
  CHECK(importance_score(g, flat, 0, 3) == 0.0);
}

TEST_CASE("top-a candidates equal a brute-force ranking") {
  const Graph g = random_graph(70, 4.0, 2, 31);
  const Eigen::VectorXd logits = random_logits(70, 4);
  PairSet excluded;
  excluded.insert({0, 1});
  excluded.insert({5, 9});

  std::vector<std::pair<double, NodePair>> ranked;
  for (int u = 0; u < 70; ++u) {
    for (int v = u + 1; v < 70; ++v) {
      if (excluded.contains({u, v}) || !flip_is_feasible(g, u, v)) continue;
      ranked.push_back({brute_importance(g, logits, u, v), {u, v}});
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  for (long a : {1L, 10L, 241L, 2000L}) {
    WorkCounters counters;
    const std::vector<NodePair> got =
        build_candidates(g, logits, CandidateLimit::top(a), excluded, &counters);
    REQUIRE(static_cast<long>(got.size()) == std::min<long>(a, ranked.size()));
    for (std::size_t k = 0; k < got.size(); ++k) {
      // Ties at the cut may legitimately differ only if scores are equal.
      CHECK(brute_importance(g, logits, got[k].u, got[k].v) ==
            doctest::Approx(ranked[k].first).epsilon(1e-12));
    }
    CHECK(got.front() == ranked.front().second);
  }

  const std::vector<NodePair> every =
      build_candidates(g, logits, CandidateLimit::all(), excluded);
  CHECK(every.size() == ranked.size());
  CHECK(every == feasible_pairs(g, excluded));
  const std::vector<NodePair> saturated =
      build_candidates(g, logits, CandidateLimit::top(1000000), excluded);
  CHECK(std::set<NodePair>(saturated.begin(), saturated.end()) ==
        std::set<NodePair>(every.begin(), every.end()));
  for (const NodePair& p : saturated) CHECK_FALSE(excluded.contains(p));
}

TEST_CASE("no feasible pairs is an error") {
  RowMatrix x = RowMatrix::Zero(2, 1);
  const Graph g = make_graph(2, {{0, 1}}, x, {0, 1}, {0, 1}, {Split::kTest, Split::kTest});
  const Eigen::VectorXd logits = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_WITH_AS(build_candidates(g, logits, CandidateLimit::top(3), PairSet{}),
                       "no feasible pairs remain", std::runtime_error);
  CHECK_THROWS_AS(build_candidates(g, logits, CandidateLimit::all(), PairSet{}),
                  std::runtime_error);
}
