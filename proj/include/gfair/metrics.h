#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "gfair/graph.h"

namespace gfair {

// |positive rate of group 0 - positive rate of group 1| over test_set, with
// a logit of exactly 0 counted as positive. Throws std::invalid_argument when
// either group has no member in test_set.
double attacker_objective(const Eigen::VectorXd& logits,
                          const std::vector<int>& sensitive,
                          const std::vector<int>& test_set);

// 1 where logit >= 0.
std::vector<int> hard_predictions(const Eigen::VectorXd& logits);

// Metrics return std::nullopt when a required conditional group is empty.
std::optional<double> delta_dp(const std::vector<int>& hard,
                               const std::vector<int>& sensitive,
                               const std::vector<int>& node_set);
std::optional<double> delta_eo(const std::vector<int>& hard,
                               const std::vector<std::optional<int>>& labels,
                               const std::vector<int>& sensitive,
                               const std::vector<int>& node_set);
std::optional<double> accuracy(const std::vector<int>& hard,
                               const std::vector<std::optional<int>>& labels,
                               const std::vector<int>& node_set);
// Mann-Whitney AUC with tie midranks. Any scores monotone in the soft
// prediction give the same value.
std::optional<double> auc(const std::vector<double>& scores,
                          const std::vector<std::optional<int>>& labels,
                          const std::vector<int>& node_set);

// L1 distance between the empirical quantile functions.
double wasserstein1_empirical(std::vector<double> a, std::vector<double> b);

// Grid-integrated mutual information between KDE-smoothed predictions and
// the sensitive attribute.
double mutual_information_kde(const std::vector<double>& predictions,
                              const std::vector<int>& sensitive, double h,
                              int m);

struct MetricReport {
  std::optional<double> acc;
  std::optional<double> auc;
  std::optional<double> delta_dp;
  std::optional<double> delta_eo;
  std::string node_set = "test";
};

// Scores node_set from per-node logits.
MetricReport make_report(const Eigen::VectorXd& logits, const Graph& graph,
                         const std::vector<int>& node_set,
                         const std::string& node_set_name);

nlohmann::json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const nlohmann::json& j);

}  // namespace gfair
