#include "gfair/surrogate.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gfair/kde.h"
#include "gfair/seeds.h"

namespace gfair {

AggregatedFeatures aggregate(const Graph& graph) {
  const int n = graph.num_nodes();
  const RowMatrix& X = graph.features();
  AggregatedFeatures zf;
  zf.dhat.resize(n);
  zf.AX = X;
  for (int i = 0; i < n; ++i) {
    zf.dhat[i] = graph.degree(i) + 1;
    for (int j : graph.neighbors(i)) zf.AX.row(i) += X.row(j);
  }
  zf.Z.resize(n, X.cols());
  for (int i = 0; i < n; ++i) {
    const double di = zf.dhat[i];
    zf.Z.row(i) = zf.AX.row(i) / (di * di);
    for (int j : graph.neighbors(i)) {
      zf.Z.row(i) += zf.AX.row(j) / (di * zf.dhat[j]);
    }
  }
  return zf;
}

void SurrogateModel::validate() const {
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("surrogate: bandwidth must be positive");
  }
  if (grid_size < 2) throw std::invalid_argument("surrogate: grid_size must be >= 2");
  if (!theta.allFinite()) throw std::invalid_argument("surrogate: theta not finite");
}

nlohmann::json to_json(const SurrogateModel& model) {
  nlohmann::json j;
  j["theta"] = std::vector<double>(model.theta.data(),
                                   model.theta.data() + model.theta.size());
  j["alpha"] = model.alpha;
  j["bandwidth"] = model.bandwidth;
  j["grid_size"] = model.grid_size;
  j["epochs"] = model.epochs;
  j["seed"] = model.seed;
  return j;
}

SurrogateModel surrogate_from_json(const nlohmann::json& j) {
  SurrogateModel m;
  const auto theta = j.at("theta").get<std::vector<double>>();
  m.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());
  m.alpha = j.at("alpha").get<double>();
  m.bandwidth = j.at("bandwidth").get<double>();
  m.grid_size = j.at("grid_size").get<int>();
  m.epochs = j.at("epochs").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.validate();
  return m;
}

Eigen::VectorXd compute_logits(const RowMatrix& Z, const Eigen::VectorXd& theta) {
  return Z * theta;
}

std::vector<double> predict_from_logits(const Eigen::VectorXd& logits) {
  std::vector<double> out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) out[i] = logistic(logits[i]);
  return out;
}

std::vector<double> predict(const AggregatedFeatures& zf,
                            const SurrogateModel& model) {
  return predict_from_logits(compute_logits(zf.Z, model.theta));
}

double kde_density(const std::vector<double>& predictions,
                   const std::vector<int>& members, double z, double h) {
  if (members.empty()) throw std::invalid_argument("kde: empty group");
  if (!(h > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
  double sum = 0.0;
  for (int i : members) sum += gaussian_kernel((z - predictions[i]) / h);
  return sum / (h * static_cast<double>(members.size()));
}

double tv_loss(const std::vector<double>& predictions,
               const std::vector<int>& sensitive, double h, int m) {
  const GroupDensities d = group_densities(predictions, sensitive, h, m);
  double sum = 0.0;
  for (int j = 0; j < m; ++j) sum += std::abs(d.p0[j] - d.p1[j]);
  return sum / m;
}

std::vector<double> tv_gradient(const std::vector<double>& predictions,
                                const std::vector<int>& sensitive, double h,
                                int m) {
  const GroupDensities d = group_densities(predictions, sensitive, h, m);
  std::vector<double> sign(m);
  for (int j = 0; j < m; ++j) {
    const double diff = d.p0[j] - d.p1[j];
    sign[j] = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
  }
  std::vector<double> grad(predictions.size(), 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double acc = 0.0;
    for_each_kernel_value(predictions[i], h, m, [&](int j, double k, double u) {
      acc += sign[j] * k * u;
    });
    const double group_scale =
        sensitive[i] == 0 ? 1.0 / d.n0 : -1.0 / d.n1;
    grad[i] = acc * group_scale / (h * h * m);
  }
  return grad;
}

double ce_loss(const std::vector<double>& predictions,
               const std::vector<std::optional<int>>& labels,
               const std::vector<int>& node_set) {
  if (node_set.empty()) throw std::invalid_argument("ce_loss: empty node set");
  double sum = 0.0;
  for (int i : node_set) {
    if (!labels[i]) throw std::invalid_argument("ce_loss: unlabeled node");
    const double p = std::clamp(predictions[i], kProbClamp, 1.0 - kProbClamp);
    sum += *labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(node_set.size());
}

SurrogateLoss surrogate_loss(const RowMatrix& Z, const Eigen::VectorXd& theta,
                             const Graph& graph, double alpha, double h, int m,
                             bool with_grad) {
  const std::vector<double> preds = predict_from_logits(compute_logits(Z, theta));
  const std::vector<int> train = graph.nodes_in(Split::kTrain);
  SurrogateLoss out;
  out.ce = ce_loss(preds, graph.labels(), train);
  out.tv = alpha != 0.0 ? tv_loss(preds, graph.sensitive(), h, m) : 0.0;
  out.total = out.ce + alpha * out.tv;
  if (!with_grad) return out;

  // Per-node dL/dlogit, then one product with Z.
  Eigen::VectorXd dlogit = Eigen::VectorXd::Zero(Z.rows());
  const double inv_train = 1.0 / static_cast<double>(train.size());
  for (int i : train) dlogit[i] += (preds[i] - *graph.label(i)) * inv_train;
  if (alpha != 0.0) {
    const std::vector<double> g = tv_gradient(preds, graph.sensitive(), h, m);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      dlogit[i] += alpha * g[i] * preds[i] * (1.0 - preds[i]);
    }
  }
  out.grad = Z.transpose() * dlogit;
  return out;
}

SurrogateModel train_surrogate(const Graph& graph, const AggregatedFeatures& zf,
                               const TrainOptions& options,
                               const std::optional<Eigen::VectorXd>& warm_start) {
  if (graph.nodes_in(Split::kTrain).empty()) {
    throw TrainingError("surrogate: empty train set");
  }
  if (options.epochs < 0) throw std::invalid_argument("surrogate: negative epochs");
  const int d = graph.feature_dim();

  SurrogateModel model;
  model.alpha = options.alpha;
  model.bandwidth = options.bandwidth;
  model.grid_size = options.grid_size;
  model.epochs = options.epochs;
  model.seed = options.seed;
  if (warm_start) {
    if (warm_start->size() != d) {
      throw std::invalid_argument("surrogate: warm start has wrong dimension");
    }
    model.theta = *warm_start;
  } else {
    auto rng = make_rng(options.seed, "surrogate/init");
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    std::uniform_real_distribution<double> init(-bound, bound);
    model.theta.resize(d);
    for (int k = 0; k < d; ++k) model.theta[k] = init(rng);
  }
  model.validate();

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
  double b1 = 1.0, b2 = 1.0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const SurrogateLoss loss =
        surrogate_loss(zf.Z, model.theta, graph, options.alpha,
                       options.bandwidth, options.grid_size, true);
    if (!std::isfinite(loss.total) || !loss.grad.allFinite()) {
      std::ostringstream msg;
      msg << "surrogate training diverged at epoch " << epoch
          << " (ce=" << loss.ce << ", tv=" << loss.tv << ")";
      throw TrainingError(msg.str());
    }
    b1 *= kBeta1;
    b2 *= kBeta2;
    m1 = kBeta1 * m1 + (1 - kBeta1) * loss.grad;
    m2 = kBeta2 * m2 + (1 - kBeta2) * loss.grad.cwiseProduct(loss.grad);
    const Eigen::VectorXd mhat = m1 / (1 - b1);
    const Eigen::VectorXd vhat = m2 / (1 - b2);
    model.theta.array() -=
        options.learning_rate * mhat.array() / (vhat.array().sqrt() + kEps);
  }
  return model;
}

SurrogateModel train_surrogate(const Graph& graph, const TrainOptions& options,
                               const std::optional<Eigen::VectorXd>& warm_start) {
  return train_surrogate(graph, aggregate(graph), options, warm_start);
}

}  // namespace gfair
