#include "gfair/verification.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gfair/attack.h"
#include "gfair/kde.h"
#include "gfair/metrics.h"
#include "gfair/seeds.h"
#include "gfair/surrogate.h"

namespace gfair {

bool VerificationReport::all_passed() const {
  for (const TheoremCheck& c : checks) {
    if (!c.ok()) return false;
  }
  return witnesses_found > 0;
}

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const TheoremCheck& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"trials", c.trials},
                      {"applicable", c.applicable},
                      {"passed", c.passed},
                      {"worst_margin", c.worst_margin},
                      {"tolerance", c.tolerance},
                      {"ok", c.ok()}});
  }
  return {{"checks", checks},
          {"witness_trials", r.witness_trials},
          {"witnesses_found", r.witnesses_found},
          {"sample_gap_above_tv", r.sample_gap_above_tv},
          {"seconds", r.seconds},
          {"all_passed", r.all_passed()}};
}

PredictionSample random_prediction_sample(std::uint64_t seed, int index) {
  auto rng = make_rng(seed, "verify/density/" + std::to_string(index));
  std::uniform_int_distribution<int> size(5, 200);
  std::uniform_real_distribution<double> mean(-3.0, 3.0), spread(0.1, 2.5),
      bandwidth(0.05, 0.2);
  std::normal_distribution<double> normal(0.0, 1.0);
  PredictionSample s;
  s.bandwidth = bandwidth(rng);
  const int n0 = size(rng);
  const double mu0 = mean(rng), sd0 = spread(rng);
  for (int k = 0; k < n0; ++k) {
    s.predictions.push_back(logistic(mu0 + sd0 * normal(rng)));
    s.sensitive.push_back(0);
  }
  // Every tenth sample gives both groups the same multiset.
  if (index % 10 == 0) {
    for (int k = n0 - 1; k >= 0; --k) {
      s.predictions.push_back(s.predictions[k]);
      s.sensitive.push_back(1);
    }
    return s;
  }
  const int n1 = size(rng);
  const double mu1 = mean(rng), sd1 = spread(rng);
  for (int k = 0; k < n1; ++k) {
    s.predictions.push_back(logistic(mu1 + sd1 * normal(rng)));
    s.sensitive.push_back(1);
  }
  return s;
}

DensityBounds density_bounds(const PredictionSample& s, int m) {
  const GroupDensities d = group_densities(s.predictions, s.sensitive, s.bandwidth, m);
  const double n = d.n0 + d.n1;
  const double pi0 = d.n0 / n, pi1 = d.n1 / n;
  DensityBounds b;
  b.marginal_floor = pi0 * pi1;
  b.min_marginal = std::numeric_limits<double>::infinity();
  double tv = 0.0, upper = 0.0, loose = 0.0;
  for (int j = 0; j < m; ++j) {
    const double diff = d.p0[j] - d.p1[j];
    tv += std::abs(diff);
    // Grid points z_j = (j+1)/m at or above one half.
    if (2 * (j + 1) >= m) upper += diff;
    const double marginal = pi0 * d.p0[j] + pi1 * d.p1[j];
    b.min_marginal = std::min(b.min_marginal, marginal);
    const double ratio = b.marginal_floor / marginal;
    loose += ratio * ratio;
  }
  b.tv = tv / m;
  b.delta_dp = std::abs(upper) / m;
  b.loose_condition = loose / m;

  std::vector<double> g0, g1;
  std::vector<int> hard(s.predictions.size()), all(s.predictions.size());
  for (std::size_t i = 0; i < s.predictions.size(); ++i) {
    (s.sensitive[i] == 0 ? g0 : g1).push_back(s.predictions[i]);
    hard[i] = s.predictions[i] >= 0.5;
    all[i] = static_cast<int>(i);
  }
  b.sample_delta_dp = *delta_dp(hard, s.sensitive, all);
  b.w1 = wasserstein1_empirical(g0, g1);
  b.mi = mutual_information_kde(s.predictions, s.sensitive, s.bandwidth, m);
  return b;
}

Eigen::VectorXd dykstra_slab_projection(const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& g,
                                        const Eigen::VectorXd& a, double eps,
                                        int max_iter, double tol) {
  const double gg = g.squaredNorm();
  const double hi = g.dot(a) + eps;
  const double lo = g.dot(a) - eps;
  auto below = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const double s = g.dot(v);
    return s > hi ? Eigen::VectorXd(v - (s - hi) / gg * g) : v;
  };
  auto above = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const double s = g.dot(v);
    return s < lo ? Eigen::VectorXd(v - (s - lo) / gg * g) : v;
  };
  Eigen::VectorXd x = y;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(y.size());
  Eigen::VectorXd q = Eigen::VectorXd::Zero(y.size());
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd z = below(x + p);
    p = x + p - z;
    const Eigen::VectorXd next = above(z + q);
    q = z + q - next;
    const double change = (next - x).norm();
    x = next;
    if (change <= tol * (1.0 + x.norm())) break;
  }
  return x;
}

namespace {

void record(TheoremCheck& c, bool applicable, double margin) {
  ++c.trials;
  if (!applicable) return;
  ++c.applicable;
  if (margin >= 0.0) ++c.passed;
  if (c.applicable == 1 || margin < c.worst_margin) c.worst_margin = margin;
}

}  // namespace

VerificationReport verify_theorems(const VerifyOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  VerificationReport report;
  constexpr double kTol = 1e-3;
  TheoremCheck dp{"delta_dp_le_tv"}, w1{"w1_le_tv"}, mi{"mi_le_tv_when_marginal_dense"},
      mi_loose{"mi_le_sqrt_tv_when_integral_le_1"}, same{"identical_groups_give_zero"};
  dp.tolerance = w1.tolerance = mi.tolerance = mi_loose.tolerance = kTol;
  same.tolerance = 1e-9;
  for (int t = 0; t < o.trials; ++t) {
    const PredictionSample s = random_prediction_sample(o.seed, t);
    const DensityBounds b = density_bounds(s, o.grid_size);
    record(dp, true, b.tv + kTol - b.delta_dp);
    record(w1, true, b.tv + kTol - b.w1);
    record(mi, b.min_marginal >= b.marginal_floor, b.tv + kTol - b.mi);
    record(mi_loose, b.loose_condition <= 1.0, std::sqrt(b.tv) + kTol - b.mi);
    const bool identical = t % 10 == 0;
    record(same, identical,
           1e-9 - std::max({b.tv, b.delta_dp, b.w1}));
    if (b.sample_delta_dp > b.tv + kTol) ++report.sample_gap_above_tv;
  }
  report.checks = {dp, w1, mi, mi_loose, same};

  TheoremCheck pgd{"pgd_matches_projection"}, slab{"pgd_constraint_holds"};
  pgd.tolerance = 1e-6;
  slab.tolerance = 1e-9;
  auto rng = make_rng(o.seed, "verify/pgd");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < o.pgd_trials; ++t) {
    const int dim = 10;
    Eigen::VectorXd g(dim), f(dim), a(dim);
    for (int k = 0; k < dim; ++k) {
      g[k] = normal(rng);
      f[k] = normal(rng);
      a[k] = unit(rng);
    }
    const double eta = 0.1 + 0.9 * unit(rng);
    const double inner = eta * std::abs(g.dot(f));
    // Alternate binding and slack budgets.
    const double eps = t % 2 == 0 ? 0.5 * unit(rng) * inner : (1.0 + unit(rng)) * inner;
    const Eigen::VectorXd closed = pgd_step_closed_form(g, f, a, eta, eps);
    const Eigen::VectorXd oracle = dykstra_slab_projection(a + eta * f, g, a, eps);
    record(pgd, true, 1e-6 - (closed - oracle).cwiseAbs().maxCoeff());
    record(slab, true, eps + 1e-9 - std::abs(g.dot(closed - a)));
  }
  report.checks.push_back(pgd);
  report.checks.push_back(slab);

  // Quadratic objective over binary vectors, maximized by single flips.
  auto wrng = make_rng(o.seed, "verify/witness");
  std::bernoulli_distribution coin(0.5);
  const int k = 6;
  for (int t = 0; t < o.witness_trials; ++t) {
    Eigen::MatrixXd q(k, k);
    Eigen::VectorXd lin(k), x(k);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) q(r, c) = normal(wrng);
      lin[r] = normal(wrng);
      x[r] = coin(wrng) ? 1.0 : 0.0;
    }
    q = 0.5 * (q + q.transpose()).eval();
    auto objective = [&](const Eigen::VectorXd& v) { return v.dot(q * v) + lin.dot(v); };
    const double base = objective(x);
    const Eigen::VectorXd grad = 2.0 * q * x + lin;
    double best_grad = -std::numeric_limits<double>::infinity();
    double best_exact = -std::numeric_limits<double>::infinity();
    double grad_pick_value = 0.0;
    for (int i = 0; i < k; ++i) {
      const double dir = 1.0 - 2.0 * x[i];
      Eigen::VectorXd y = x;
      y[i] = 1.0 - y[i];
      const double value = objective(y);
      best_exact = std::max(best_exact, value);
      if (grad[i] * dir > best_grad) {
        best_grad = grad[i] * dir;
        grad_pick_value = value;
      }
    }
    ++report.witness_trials;
    if (grad_pick_value < base && best_exact > base) ++report.witnesses_found;
  }

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace gfair
