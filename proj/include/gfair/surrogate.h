#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "gfair/graph.h"

namespace gfair {

// Non-finite loss or gradient during optimization.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Z = D^-1 Â D^-1 Â X with Â = A + I, plus the caches needed to update it
// after single edge flips.
struct AggregatedFeatures {
  RowMatrix Z;
  RowMatrix AX;
  std::vector<int> dhat;
};

AggregatedFeatures aggregate(const Graph& graph);

struct SurrogateModel {
  Eigen::VectorXd theta;
  double alpha = 1.0;
  double bandwidth = 0.1;
  int grid_size = 10000;
  int epochs = 0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

nlohmann::json to_json(const SurrogateModel& model);
SurrogateModel surrogate_from_json(const nlohmann::json& j);

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd compute_logits(const RowMatrix& Z, const Eigen::VectorXd& theta);
std::vector<double> predict(const AggregatedFeatures& zf,
                            const SurrogateModel& model);
std::vector<double> predict_from_logits(const Eigen::VectorXd& logits);

// KDE of the predictions of `members` at a single point z.
double kde_density(const std::vector<double>& predictions,
                   const std::vector<int>& members, double z, double h);

// Grid TV between group-conditional KDE densities, over all indices.
double tv_loss(const std::vector<double>& predictions,
               const std::vector<int>& sensitive, double h, int m);

// dTV/dy_i with sign(0) = 0.
std::vector<double> tv_gradient(const std::vector<double>& predictions,
                                const std::vector<int>& sensitive, double h,
                                int m);

inline constexpr double kProbClamp = 1e-12;

// Mean binary cross-entropy over node_set; every member must be labeled.
double ce_loss(const std::vector<double>& predictions,
               const std::vector<std::optional<int>>& labels,
               const std::vector<int>& node_set);

struct SurrogateLoss {
  double ce = 0.0;
  double tv = 0.0;
  double total = 0.0;
  Eigen::VectorXd grad;  // empty unless requested
};

// CE over the train split plus alpha * TV over all nodes.
SurrogateLoss surrogate_loss(const RowMatrix& Z, const Eigen::VectorXd& theta,
                             const Graph& graph, double alpha, double h, int m,
                             bool with_grad);

struct TrainOptions {
  double alpha = 1.0;
  double bandwidth = 0.1;
  int grid_size = 10000;
  int epochs = 2000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

SurrogateModel train_surrogate(const Graph& graph, const AggregatedFeatures& zf,
                               const TrainOptions& options,
                               const std::optional<Eigen::VectorXd>& warm_start =
                                   std::nullopt);

SurrogateModel train_surrogate(const Graph& graph, const TrainOptions& options,
                               const std::optional<Eigen::VectorXd>& warm_start =
                                   std::nullopt);

}  // namespace gfair
