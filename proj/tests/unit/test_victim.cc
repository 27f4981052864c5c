#include <cmath>
#include <random>

#include "doctest.h"

#include "gfair/sbm.h"
#include "gfair/victim.h"
#include "support/fixtures.h"

using namespace gfair;
using gfair::testing::make_graph;
using gfair::testing::random_graph;

namespace {

VictimModel random_victim(int d, int h, VictimKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VictimModel m;
  m.kind = kind;
  m.hyper.hidden_dim = h;
  m.w1.resize(d, h);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < h; ++c) m.w1(r, c) = normal(rng);
  }
  m.w2.resize(h);
  for (int c = 0; c < h; ++c) m.w2[c] = normal(rng);
  return m;
}

// Dense two-layer forward pass.
Eigen::VectorXd dense_logits(const VictimModel& m, const Graph& g) {
  const int n = g.num_nodes();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (const NodePair& e : g.edges()) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  const Eigen::VectorXd dinv = a.rowwise().sum().cwiseInverse();
  const Eigen::MatrixXd p = dinv.asDiagonal() * a * dinv.asDiagonal();
  const Eigen::MatrixXd x = g.features();
  const Eigen::MatrixXd hidden = (p * x * Eigen::MatrixXd(m.w1)).cwiseMax(0.0);
  return p * hidden * m.w2;
}

// max |analytic - central difference| / max |analytic| over every weight.
double fd_relative_error(VictimModel m, const Graph& g) {
  const VictimLoss analytic = victim_loss(m, g, true);
  constexpr double h = 1e-6;
  double err = 0.0, scale = 0.0;
  for (int r = 0; r < m.w1.rows(); ++r) {
    for (int c = 0; c < m.w1.cols(); ++c) {
      const double keep = m.w1(r, c);
      m.w1(r, c) = keep + h;
      const double up = victim_loss(m, g, false).total;
      m.w1(r, c) = keep - h;
      const double down = victim_loss(m, g, false).total;
      m.w1(r, c) = keep;
      err = std::max(err, std::abs((up - down) / (2 * h) - analytic.grad_w1(r, c)));
      scale = std::max(scale, std::abs(analytic.grad_w1(r, c)));
    }
  }
  for (int c = 0; c < m.w2.size(); ++c) {
    const double keep = m.w2[c];
    m.w2[c] = keep + h;
    const double up = victim_loss(m, g, false).total;
    m.w2[c] = keep - h;
    const double down = victim_loss(m, g, false).total;
    m.w2[c] = keep;
    err = std::max(err, std::abs((up - down) / (2 * h) - analytic.grad_w2[c]));
    scale = std::max(scale, std::abs(analytic.grad_w2[c]));
  }
  return err / scale;
}

// Ten-node ring with two chords; train, val and test each hold both groups.
Graph ten_node_graph() {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix x(10, 3);
  for (int i = 0; i < 10; ++i) {
    for (int f = 0; f < 3; ++f) x(i, f) = normal(rng);
  }
  std::vector<NodePair> edges = {{0, 5}, {2, 7}};
  for (int i = 0; i < 10; ++i) edges.push_back(canonical_pair(i, (i + 1) % 10));
  return make_graph(10, edges, x, {0, 1, 1, 0, 1, 0, 0, 1, 1, 0},
                    {0, 1, 0, 1, 0, 1, 0, 1, 0, 1},
                    {Split::kTrain, Split::kTrain, Split::kTrain, Split::kTrain, Split::kVal,
                     Split::kVal, Split::kTest, Split::kTest, Split::kTest, Split::kTest});
}

VictimHyper quick_hyper(std::uint64_t seed) {
  VictimHyper h;
  h.epochs = 200;
  h.learning_rate = 1e-2;
  h.seed = seed;
  return h;
}

}  // namespace

TEST_CASE("normalized adjacency and logits match a dense forward pass") {
  const Graph g = random_graph(25, 3.0, 4, 3);
  const VictimModel m = random_victim(4, 5, VictimKind::kVanilla, 1);
  CHECK((victim_logits(m, g) - dense_logits(m, g)).cwiseAbs().maxCoeff() <= 1e-12);
  const SparseMatrix p = normalized_adjacency(g);
  for (const NodePair& e : g.edges()) {
    const double expected = 1.0 / ((g.degree(e.u) + 1.0) * (g.degree(e.v) + 1.0));
    CHECK(p.coeff(e.u, e.v) == doctest::Approx(expected).epsilon(1e-15));
  }
}

TEST_CASE("victim gradients match finite differences") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g =
        seed == 0 ? ten_node_graph() : random_graph(20 + static_cast<int>(seed), 3.0, 3, 100 + seed);
    const VictimKind kind = seed % 2 ? VictimKind::kRegularized : VictimKind::kVanilla;
    const VictimModel m = random_victim(3, 4, kind, seed);
    CAPTURE(seed);
    CHECK(fd_relative_error(m, g) <= 1e-4);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("zero regularization weight reproduces vanilla training") {
  const Graph g = random_graph(60, 4.0, 3, 8);
  VictimHyper h = quick_hyper(2);
  h.reg_weight = 0.0;
  const VictimModel reg = train_victim(g, VictimKind::kRegularized, h);
  const VictimModel van = train_victim(g, VictimKind::kVanilla, h);
  CHECK(reg.w1 == van.w1);
  CHECK(reg.w2 == van.w2);
}

TEST_CASE("regularized training lowers the parity gap") {
  int not_worse = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SbmOptions o;
    o.num_nodes = 200;
    o.seed = seed;
    const Graph g = generate_sbm(o);
    VictimHyper h;
    h.seed = seed;
    h.epochs = 400;
    h.learning_rate = 1e-2;
    const std::vector<int> test = g.nodes_in(Split::kTest);
    const MetricReport van =
        evaluate_victim(train_victim(g, VictimKind::kVanilla, h), g, test, "test");
    const MetricReport reg =
        evaluate_victim(train_victim(g, VictimKind::kRegularized, h), g, test, "test");
    REQUIRE(van.delta_dp.has_value());
    REQUIRE(reg.delta_dp.has_value());
    CAPTURE(seed);
    not_worse += *reg.delta_dp <= *van.delta_dp + 1e-12;
  }
  CHECK(not_worse >= 4);
}

TEST_CASE("training and evaluation are deterministic") {
  const Graph g = random_graph(50, 4.0, 3, 4);
  const VictimModel a = train_victim(g, VictimKind::kRegularized, quick_hyper(9));
  const VictimModel b = train_victim(g, VictimKind::kRegularized, quick_hyper(9));
  CHECK(weight_fingerprint(a) == weight_fingerprint(b));
  CHECK(weight_fingerprint(a) !=
        weight_fingerprint(train_victim(g, VictimKind::kRegularized, quick_hyper(10))));
  const std::vector<int> test = g.nodes_in(Split::kTest);
  const MetricReport ra = evaluate_victim(a, g, test, "test");
  const MetricReport rb = evaluate_victim(b, g, test, "test");
  CHECK(to_json(ra) == to_json(rb));
}

TEST_CASE("victim JSON round trip") {
  const Graph g = random_graph(30, 3.0, 2, 5);
  const VictimModel m = train_victim(g, VictimKind::kRegularized, quick_hyper(1));
  const VictimModel back = victim_from_json(to_json(m));
  CHECK(back.kind == m.kind);
  CHECK(back.w1 == m.w1);
  CHECK(back.w2 == m.w2);
  CHECK(weight_fingerprint(back) == weight_fingerprint(m));
  CHECK(parse_victim_kind(to_string(VictimKind::kRegularized)) == VictimKind::kRegularized);
  CHECK_THROWS(parse_victim_kind("bogus"));
}

TEST_CASE("training input errors") {
  // Both groups are in test, but train holds group 0 only.
  const Graph one_group = make_graph(4, {{0, 1}, {1, 2}, {2, 3}}, RowMatrix::Ones(4, 1),
                                     {0, 1, 0, 1}, {0, 0, 0, 1},
                                     {Split::kTrain, Split::kTrain, Split::kTest, Split::kTest});
  CHECK_THROWS_AS(train_victim(one_group, VictimKind::kRegularized, quick_hyper(0)),
                  std::invalid_argument);
  VictimHyper bad = quick_hyper(0);
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train_victim(one_group, VictimKind::kVanilla, bad), std::invalid_argument);
  const VictimModel m = random_victim(2, 3, VictimKind::kVanilla, 0);
  CHECK_THROWS_AS(victim_logits(m, one_group), std::invalid_argument);
}
