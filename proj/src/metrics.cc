#include "gfair/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gfair/kde.h"

namespace gfair {

double attacker_objective(const Eigen::VectorXd& logits,
                          const std::vector<int>& sensitive,
                          const std::vector<int>& test_set) {
  int n[2] = {0, 0};
  int pos[2] = {0, 0};
  for (int i : test_set) {
    const int s = sensitive[i];
    ++n[s];
    if (logits[i] >= 0.0) ++pos[s];
  }
  if (n[0] == 0 || n[1] == 0) {
    throw std::invalid_argument("attacker objective: empty group within test set");
  }
  return std::abs(static_cast<double>(pos[0]) / n[0] -
                  static_cast<double>(pos[1]) / n[1]);
}

std::vector<int> hard_predictions(const Eigen::VectorXd& logits) {
  std::vector<int> out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) out[i] = logits[i] >= 0.0;
  return out;
}

std::optional<double> delta_dp(const std::vector<int>& hard,
                               const std::vector<int>& sensitive,
                               const std::vector<int>& node_set) {
  int n[2] = {0, 0};
  int pos[2] = {0, 0};
  for (int i : node_set) {
    ++n[sensitive[i]];
    pos[sensitive[i]] += hard[i];
  }
  if (n[0] == 0 || n[1] == 0) return std::nullopt;
  return std::abs(static_cast<double>(pos[0]) / n[0] -
                  static_cast<double>(pos[1]) / n[1]);
}

std::optional<double> delta_eo(const std::vector<int>& hard,
                               const std::vector<std::optional<int>>& labels,
                               const std::vector<int>& sensitive,
                               const std::vector<int>& node_set) {
  int n[2] = {0, 0};
  int pos[2] = {0, 0};
  for (int i : node_set) {
    if (!labels[i] || *labels[i] != 1) continue;
    ++n[sensitive[i]];
    pos[sensitive[i]] += hard[i];
  }
  if (n[0] == 0 || n[1] == 0) return std::nullopt;
  return std::abs(static_cast<double>(pos[0]) / n[0] -
                  static_cast<double>(pos[1]) / n[1]);
}

std::optional<double> accuracy(const std::vector<int>& hard,
                               const std::vector<std::optional<int>>& labels,
                               const std::vector<int>& node_set) {
  int total = 0, correct = 0;
  for (int i : node_set) {
    if (!labels[i]) continue;
    ++total;
    correct += hard[i] == *labels[i];
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / total;
}

std::optional<double> auc(const std::vector<double>& scores,
                          const std::vector<std::optional<int>>& labels,
                          const std::vector<int>& node_set) {
  std::vector<std::pair<double, int>> items;
  for (int i : node_set) {
    if (labels[i]) items.emplace_back(scores[i], *labels[i]);
  }
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos_rank_sum = 0.0;
  long n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].first == items[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (items[k].second == 1) {
        pos_rank_sum += midrank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double u = pos_rank_sum - 0.5 * n_pos * (n_pos + 1.0);
  return u / (static_cast<double>(n_pos) * n_neg);
}

double wasserstein1_empirical(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("wasserstein: empty sample");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  // Walk the merged breakpoints k/na and l/nb of the two quantile functions.
  double total = 0.0, t = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    const double next_a = (ia + 1) / na;
    const double next_b = (ib + 1) / nb;
    const double next = std::min(next_a, next_b);
    total += (next - t) * std::abs(a[ia] - b[ib]);
    t = next;
    if (next_a <= next) ++ia;
    if (next_b <= next) ++ib;
  }
  return total;
}

double mutual_information_kde(const std::vector<double>& predictions,
                              const std::vector<int>& sensitive, double h,
                              int m) {
  constexpr double kFloor = 1e-12;
  const GroupDensities d = group_densities(predictions, sensitive, h, m);
  const double n = d.n0 + d.n1;
  const double pi0 = d.n0 / n, pi1 = d.n1 / n;
  double sum = 0.0;
  for (int j = 0; j < m; ++j) {
    const double joint0 = pi0 * d.p0[j];
    const double joint1 = pi1 * d.p1[j];
    const double marginal = joint0 + joint1;
    if (joint0 >= kFloor) sum += joint0 * std::log(d.p0[j] / marginal);
    if (joint1 >= kFloor) sum += joint1 * std::log(d.p1[j] / marginal);
  }
  return sum / m;
}

MetricReport make_report(const Eigen::VectorXd& logits, const Graph& graph,
                         const std::vector<int>& node_set,
                         const std::string& node_set_name) {
  const std::vector<int> hard = hard_predictions(logits);
  const std::vector<double> scores(logits.data(), logits.data() + logits.size());
  MetricReport r;
  r.node_set = node_set_name;
  r.acc = accuracy(hard, graph.labels(), node_set);
  r.auc = auc(scores, graph.labels(), node_set);
  r.delta_dp = delta_dp(hard, graph.sensitive(), node_set);
  r.delta_eo = delta_eo(hard, graph.labels(), graph.sensitive(), node_set);
  return r;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

nlohmann::json to_json(const MetricReport& report) {
  return {{"acc", opt(report.acc)},
          {"auc", opt(report.auc)},
          {"delta_dp", opt(report.delta_dp)},
          {"delta_eo", opt(report.delta_eo)},
          {"node_set", report.node_set}};
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.acc = opt_from(j, "acc");
  r.auc = opt_from(j, "auc");
  r.delta_dp = opt_from(j, "delta_dp");
  r.delta_eo = opt_from(j, "delta_eo");
  r.node_set = j.at("node_set").get<std::string>();
  return r;
}

}  // namespace gfair
