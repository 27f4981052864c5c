#include <cmath>
#include <random>

#include "doctest.h"

#include "gfair/kde.h"
#include "gfair/metrics.h"
#include "gfair/sbm.h"
#include "gfair/surrogate.h"
#include "support/fixtures.h"

using namespace gfair;
using gfair::testing::dense_z;
using gfair::testing::make_graph;
using gfair::testing::random_graph;

namespace {

// Direct Gaussian KDE, no recurrence.
double direct_density(const std::vector<double>& y, const std::vector<int>& s, int group,
                      double z, double h) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (s[i] != group) continue;
    const double u = (z - y[i]) / h;
    sum += std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
    ++count;
  }
  return sum / (h * count);
}

// Composite Simpson on [0,1] of |p0 - p1|.
double integrated_tv(const std::vector<double>& y, const std::vector<int>& s, double h,
                     int intervals) {
  const double step = 1.0 / intervals;
  double sum = 0.0;
  for (int k = 0; k <= intervals; ++k) {
    const double z = k * step;
    const double w = (k == 0 || k == intervals) ? 1 : (k % 2 ? 4 : 2);
    sum += w * std::abs(direct_density(y, s, 0, z, h) - direct_density(y, s, 1, z, h));
  }
  return sum * step / 3.0;
}

double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

Eigen::VectorXd finite_difference(const RowMatrix& z, Eigen::VectorXd theta, const Graph& g,
                                  double alpha, double h, int m) {
  constexpr double step = 1e-5;
  Eigen::VectorXd grad(theta.size());
  for (int k = 0; k < theta.size(); ++k) {
    const double keep = theta[k];
    theta[k] = keep + step;
    const double up = surrogate_loss(z, theta, g, alpha, h, m, false).total;
    theta[k] = keep - step;
    const double down = surrogate_loss(z, theta, g, alpha, h, m, false).total;
    theta[k] = keep;
    grad[k] = (up - down) / (2 * step);
  }
  return grad;
}

}  // namespace

TEST_CASE("isolated node aggregates to itself") {
  RowMatrix x(2, 1);
  x << 7.0, -2.0;
  const Graph g = make_graph(2, {}, x, {0, 1}, {0, 1}, {Split::kTest, Split::kTest});
  const AggregatedFeatures zf = aggregate(g);
  CHECK(zf.dhat == std::vector<int>{1, 1});
  CHECK(zf.Z(0, 0) == 7.0);
  CHECK(zf.Z(1, 0) == -2.0);
}

TEST_CASE("two connected nodes, hand computation") {
  RowMatrix x(2, 1);
  x << 1.0, 3.0;
  const Graph g = make_graph(2, {{0, 1}}, x, {0, 1}, {0, 1}, {Split::kTest, Split::kTest});
  const AggregatedFeatures zf = aggregate(g);
  CHECK(zf.dhat == std::vector<int>{2, 2});
  CHECK(zf.AX(0, 0) == 4.0);
  CHECK(zf.AX(1, 0) == 4.0);
  CHECK(zf.Z(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(zf.Z(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("aggregate matches the dense product on random graphs") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Graph g = random_graph(50, 5.0, 4, seed);
    const AggregatedFeatures zf = aggregate(g);
    const Eigen::MatrixXd oracle = dense_z(g);
    CHECK((Eigen::MatrixXd(zf.Z) - oracle).cwiseAbs().maxCoeff() <= 1e-12);
    for (int i = 0; i < g.num_nodes(); ++i) CHECK(zf.dhat[i] == g.degree(i) + 1);
  }
}

TEST_CASE("predictions") {
  const Graph g = random_graph(30, 3.0, 3, 2);
  const AggregatedFeatures zf = aggregate(g);
  SurrogateModel model;
  model.theta = Eigen::VectorXd::Zero(3);
  for (double p : predict(zf, model)) CHECK(p == 0.5);

  model.theta = Eigen::Vector3d(0.7, -1.3, 2.1);
  const std::vector<double> y = predict(zf, model);
  for (int i = 0; i < g.num_nodes(); ++i) {
    double logit = 0.0;
    for (int k = 0; k < 3; ++k) logit += zf.Z(i, k) * model.theta[k];
    CHECK(std::abs(y[i] - 1.0 / (1.0 + std::exp(-logit))) <= 1e-15);
  }
  Eigen::VectorXd zero(1);
  zero << 0.0;
  CHECK(hard_predictions(zero)[0] == 1);
}

TEST_CASE("kernel density values") {
  const std::vector<double> y = {0.5};
  const std::vector<int> members = {0};
  CHECK(kde_density(y, members, 0.5, 0.1) == doctest::Approx(1.0 / (0.1 * std::sqrt(2 * M_PI))));
  CHECK(kde_density(y, members, 0.6, 0.1) == doctest::Approx(2.4197072451914337).epsilon(1e-12));
  CHECK_THROWS_AS(kde_density(y, {}, 0.5, 0.1), std::invalid_argument);

  // Mass over a wide grid is one, whatever leaks outside [0,1].
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> preds(25);
  std::vector<int> all(25);
  for (int i = 0; i < 25; ++i) {
    preds[i] = unit(rng);
    all[i] = i;
  }
  double mass = 0.0;
  const double dz = 1e-3;
  for (double z = -1.0; z <= 2.0; z += dz) mass += kde_density(preds, all, z, 0.1) * dz;
  CHECK(std::abs(mass - 1.0) <= 1e-2);
}

TEST_CASE("grid densities agree with direct evaluation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> y(60);
  std::vector<int> s(60);
  for (int i = 0; i < 60; ++i) {
    y[i] = unit(rng);
    s[i] = i % 3 == 0;
  }
  const int m = 5000;
  const GroupDensities d = group_densities(y, s, 0.07, m);
  for (int j = 0; j < m; j += 37) {
    const double z = (j + 1.0) / m;
    CHECK(std::abs(d.p0[j] - direct_density(y, s, 0, z, 0.07)) <= 1e-10);
    CHECK(std::abs(d.p1[j] - direct_density(y, s, 1, z, 0.07)) <= 1e-10);
  }
}

TEST_CASE("total variation") {
  std::vector<double> y = {0.2, 0.4, 0.9, 0.9, 0.4, 0.2};
  std::vector<int> s = {0, 0, 0, 1, 1, 1};
  CHECK(tv_loss(y, s, 0.1, 1000) == 0.0);

  std::vector<double> far;
  std::vector<int> groups;
  for (int i = 0; i < 10; ++i) {
    far.push_back(0.1);
    groups.push_back(0);
    far.push_back(0.9);
    groups.push_back(1);
  }
  const double tv = tv_loss(far, groups, 0.1, 10000);
  CHECK(tv > 1.5);
  CHECK(std::abs(tv - integrated_tv(far, groups, 0.1, 200000)) <= 1e-3);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> r(40);
  std::vector<int> rs(40), swapped(40);
  for (int i = 0; i < 40; ++i) {
    r[i] = unit(rng);
    rs[i] = i % 2;
    swapped[i] = 1 - rs[i];
  }
  CHECK(tv_loss(r, rs, 0.1, 10000) == doctest::Approx(tv_loss(r, swapped, 0.1, 10000)).epsilon(1e-13));
  CHECK(std::abs(tv_loss(r, rs, 0.1, 10000) - integrated_tv(r, rs, 0.1, 200000)) <= 1e-3);
}

TEST_CASE("cross-entropy") {
  const std::vector<std::optional<int>> labels = {1, 0, 1};
  const std::vector<int> set = {0, 1, 2};
  CHECK(ce_loss({1.0, 0.0, 1.0}, labels, set) <= 1e-11);
  CHECK(ce_loss({0.5, 0.5, 0.5}, labels, set) == std::log(2.0));
  const std::vector<double> p = {0.3, 0.8, 0.65};
  const double ref = -(std::log(0.3) + std::log(0.2) + std::log(0.65)) / 3.0;
  CHECK(std::abs(ce_loss(p, labels, set) - ref) <= 1e-12);
  CHECK_THROWS_AS(ce_loss(p, labels, {}), std::invalid_argument);
}

TEST_CASE("surrogate gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = random_graph(24, 3.0, 4, 100 + seed);
    const AggregatedFeatures zf = aggregate(g);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd theta(4);
    for (int k = 0; k < 4; ++k) theta[k] = normal(rng);
    const SurrogateLoss loss = surrogate_loss(zf.Z, theta, g, 1.0, 0.1, 2000, true);
    const Eigen::VectorXd numeric = finite_difference(zf.Z, theta, g, 1.0, 0.1, 2000);
    CHECK(max_relative_error(loss.grad, numeric) <= 1e-4);
  }
}

TEST_CASE("alpha zero fits separable data") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 80;
  RowMatrix x(n, 2);
  std::vector<int> labels(n), sensitive(n);
  std::vector<Split> split(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
    labels[i] = x(i, 0) + 0.5 * x(i, 1) > 0 ? 1 : 0;
    x(i, 0) += labels[i] ? 0.3 : -0.3;  // margin
    sensitive[i] = i % 2;
    split[i] = i < 60 ? Split::kTrain : Split::kTest;
  }
  const Graph g = make_graph(n, {}, x, labels, sensitive, split);
  TrainOptions o;
  o.alpha = 0.0;
  o.grid_size = 100;
  o.epochs = 3000;
  o.learning_rate = 1e-2;
  const SurrogateModel model = train_surrogate(g, o);
  const std::vector<double> y = predict(aggregate(g), model);
  int correct = 0;
  for (int i = 0; i < 60; ++i) correct += (y[i] >= 0.5) == (labels[i] == 1);
  CHECK(correct / 60.0 >= 0.99);
}

TEST_CASE("fairness weight lowers the surrogate's total variation") {
  SbmOptions sbm;
  const Graph g = generate_sbm(sbm);
  const AggregatedFeatures zf = aggregate(g);
  TrainOptions o;
  o.grid_size = 1000;
  o.alpha = 0.0;
  const SurrogateModel plain = train_surrogate(g, zf, o);
  o.alpha = 1.0;
  const SurrogateModel fair = train_surrogate(g, zf, o);
  const double tv_plain = tv_loss(predict(zf, plain), g.sensitive(), 0.1, 1000);
  const double tv_fair = tv_loss(predict(zf, fair), g.sensitive(), 0.1, 1000);
  CHECK(tv_fair < tv_plain);
}

TEST_CASE("training is deterministic and warm start continues from theta") {
  const Graph g = random_graph(40, 4.0, 3, 21);
  TrainOptions o;
  o.grid_size = 200;
  o.epochs = 50;
  o.seed = 5;
  const SurrogateModel a = train_surrogate(g, o);
  const SurrogateModel b = train_surrogate(g, o);
  CHECK(a.theta == b.theta);
  o.epochs = 0;
  const SurrogateModel c = train_surrogate(g, o, a.theta);
  CHECK(c.theta == a.theta);
}

TEST_CASE("overflowing attributes abort training") {
  RowMatrix x(4, 1);
  x << 1e308, 1e308, 1e308, 1e308;
  const Graph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}}, x, {0, 1, 0, 1}, {0, 1, 0, 1},
                             {Split::kTrain, Split::kTrain, Split::kTest, Split::kTest});
  TrainOptions o;
  o.grid_size = 50;
  o.epochs = 5;
  CHECK_THROWS_AS(train_surrogate(g, o), TrainingError);
}

TEST_CASE("checkpoint round-trip") {
  SurrogateModel m;
  m.theta = Eigen::Vector3d(0.1, -1.0 / 3.0, 2.5);
  m.epochs = 7;
  m.seed = 99;
  const SurrogateModel r = surrogate_from_json(to_json(m));
  CHECK(r.theta == m.theta);
  CHECK(r.epochs == 7);
  CHECK(r.seed == 99);
  CHECK(r.grid_size == m.grid_size);
  m.bandwidth = 0.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
