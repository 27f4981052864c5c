#include "gfair/victim.h"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gfair/seeds.h"
#include "gfair/surrogate.h"

namespace gfair {

std::string_view to_string(VictimKind kind) {
  return kind == VictimKind::kVanilla ? "vanilla" : "regularized";
}

VictimKind parse_victim_kind(std::string_view text) {
  if (text == "vanilla") return VictimKind::kVanilla;
  if (text == "regularized") return VictimKind::kRegularized;
  throw std::invalid_argument("unknown victim kind '" + std::string(text) + "'");
}

SparseMatrix normalized_adjacency(const Graph& graph) {
  const int n = graph.num_nodes();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n) + 2 * graph.num_edges());
  for (int i = 0; i < n; ++i) {
    const double di = graph.degree(i) + 1.0;
    entries.emplace_back(i, i, 1.0 / (di * di));
    for (int j : graph.neighbors(i)) {
      entries.emplace_back(i, j, 1.0 / (di * (graph.degree(j) + 1.0)));
    }
  }
  SparseMatrix p(n, n);
  p.setFromTriplets(entries.begin(), entries.end());
  return p;
}

namespace {

struct Forward {
  RowMatrix px;
  RowMatrix pre;
  RowMatrix hidden;
  Eigen::VectorXd logits;
};

Forward forward(const VictimModel& model, const SparseMatrix& p, const RowMatrix& px) {
  Forward f;
  f.pre = px * model.w1;
  f.hidden = f.pre.cwiseMax(0.0);
  f.logits = p * (f.hidden * model.w2);
  return f;
}

VictimLoss loss_with(const VictimModel& model, const Graph& graph,
                     const SparseMatrix& p, const RowMatrix& px, bool with_grad) {
  const Forward f = forward(model, p, px);
  const std::vector<int> train = graph.nodes_in(Split::kTrain);
  if (train.empty()) throw std::invalid_argument("victim: empty train set");
  const std::vector<double> probs = predict_from_logits(f.logits);
  VictimLoss out;
  out.ce = ce_loss(probs, graph.labels(), train);

  Eigen::VectorXd dlogit = Eigen::VectorXd::Zero(f.logits.size());
  const double inv_train = 1.0 / static_cast<double>(train.size());
  for (int i : train) dlogit[i] = (probs[i] - *graph.label(i)) * inv_train;

  const bool regularized =
      model.kind == VictimKind::kRegularized && model.hyper.reg_weight != 0.0;
  if (regularized) {
    double sum[2] = {0.0, 0.0};
    int count[2] = {0, 0};
    for (int i : train) {
      sum[graph.sensitive(i)] += probs[i];
      ++count[graph.sensitive(i)];
    }
    if (count[0] == 0 || count[1] == 0) {
      throw std::invalid_argument("victim: regularizer needs both groups in train");
    }
    const double gap = sum[0] / count[0] - sum[1] / count[1];
    out.fairness = std::abs(gap);
    const double sgn = gap > 0 ? 1.0 : (gap < 0 ? -1.0 : 0.0);
    const double w = model.hyper.reg_weight;
    for (int i : train) {
      const double scale = graph.sensitive(i) == 0 ? 1.0 / count[0] : -1.0 / count[1];
      dlogit[i] += w * sgn * scale * probs[i] * (1.0 - probs[i]);
    }
    out.total = out.ce + w * out.fairness;
  } else {
    out.total = out.ce;
  }
  if (!with_grad) return out;

  // P is symmetric, so the backward pass through P is another product with P.
  const Eigen::VectorXd dout = p * dlogit;
  out.grad_w2 = f.hidden.transpose() * dout;
  RowMatrix dpre = dout * model.w2.transpose();
  dpre = dpre.cwiseProduct((f.pre.array() > 0.0).cast<double>().matrix());
  out.grad_w1 = px.transpose() * dpre;
  return out;
}

}  // namespace

Eigen::VectorXd victim_logits(const VictimModel& model, const Graph& graph) {
  if (model.w1.rows() != graph.feature_dim()) {
    throw std::invalid_argument("victim: feature dimension mismatch");
  }
  const SparseMatrix p = normalized_adjacency(graph);
  const RowMatrix px = p * graph.features();
  return forward(model, p, px).logits;
}

VictimLoss victim_loss(const VictimModel& model, const Graph& graph, bool with_grad) {
  const SparseMatrix p = normalized_adjacency(graph);
  const RowMatrix px = p * graph.features();
  return loss_with(model, graph, p, px, with_grad);
}

VictimModel train_victim(const Graph& graph, VictimKind kind, const VictimHyper& hyper) {
  if (hyper.hidden_dim < 1) throw std::invalid_argument("victim: hidden_dim must be >= 1");
  if (hyper.epochs < 0) throw std::invalid_argument("victim: epochs must be >= 0");
  if (!(hyper.learning_rate > 0.0)) {
    throw std::invalid_argument("victim: learning_rate must be positive");
  }
  const int d = graph.feature_dim();
  const int h = hyper.hidden_dim;
  VictimModel model;
  model.kind = kind;
  model.hyper = hyper;
  auto rng = make_rng(hyper.seed, "victim/init");
  const double b1 = std::sqrt(6.0 / (d + h));
  const double b2 = std::sqrt(6.0 / (h + 1));
  std::uniform_real_distribution<double> u1(-b1, b1), u2(-b2, b2);
  model.w1.resize(d, h);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < h; ++c) model.w1(r, c) = u1(rng);
  }
  model.w2.resize(h);
  for (int c = 0; c < h; ++c) model.w2[c] = u2(rng);

  const SparseMatrix p = normalized_adjacency(graph);
  const RowMatrix px = p * graph.features();
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  RowMatrix m1 = RowMatrix::Zero(d, h), v1 = RowMatrix::Zero(d, h);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(h), v2 = Eigen::VectorXd::Zero(h);
  double c1 = 1.0, c2 = 1.0;
  const double lr = hyper.learning_rate;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const VictimLoss loss = loss_with(model, graph, p, px, true);
    if (!std::isfinite(loss.total) || !loss.grad_w1.allFinite() ||
        !loss.grad_w2.allFinite()) {
      std::ostringstream msg;
      msg << "victim training diverged at epoch " << epoch;
      throw TrainingError(msg.str());
    }
    c1 *= kBeta1;
    c2 *= kBeta2;
    m1 = kBeta1 * m1 + (1 - kBeta1) * loss.grad_w1;
    v1 = kBeta2 * v1 + (1 - kBeta2) * loss.grad_w1.cwiseProduct(loss.grad_w1);
    m2 = kBeta1 * m2 + (1 - kBeta1) * loss.grad_w2;
    v2 = kBeta2 * v2 + (1 - kBeta2) * loss.grad_w2.cwiseProduct(loss.grad_w2);
    model.w1.array() -= lr * (m1.array() / (1 - c1)) /
                        ((v1.array() / (1 - c2)).sqrt() + kEps);
    model.w2.array() -= lr * (m2.array() / (1 - c1)) /
                        ((v2.array() / (1 - c2)).sqrt() + kEps);
  }
  return model;
}

MetricReport evaluate_victim(const VictimModel& model, const Graph& graph,
                             const std::vector<int>& node_set,
                             const std::string& node_set_name) {
  return make_report(victim_logits(model, graph), graph, node_set, node_set_name);
}

std::uint64_t weight_fingerprint(const VictimModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const double* data, Eigen::Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < static_cast<std::size_t>(count) * sizeof(double); ++k) {
      h ^= bytes[k];
      h *= 0x100000001b3ull;
    }
  };
  mix(model.w1.data(), model.w1.size());
  mix(model.w2.data(), model.w2.size());
  return h;
}

nlohmann::json to_json(const VictimModel& model) {
  nlohmann::json w1 = nlohmann::json::array();
  for (Eigen::Index r = 0; r < model.w1.rows(); ++r) {
    w1.push_back(std::vector<double>(model.w1.row(r).data(),
                                     model.w1.row(r).data() + model.w1.cols()));
  }
  return {{"kind", std::string(to_string(model.kind))},
          {"input_dim", model.w1.rows()},
          {"hidden_dim", model.hyper.hidden_dim},
          {"w1", w1},
          {"w2", std::vector<double>(model.w2.data(), model.w2.data() + model.w2.size())},
          {"epochs", model.hyper.epochs},
          {"learning_rate", model.hyper.learning_rate},
          {"reg_weight", model.hyper.reg_weight},
          {"seed", model.hyper.seed}};
}

VictimModel victim_from_json(const nlohmann::json& j) {
  VictimModel m;
  m.kind = parse_victim_kind(j.at("kind").get<std::string>());
  m.hyper.hidden_dim = j.at("hidden_dim").get<int>();
  m.hyper.epochs = j.at("epochs").get<int>();
  m.hyper.learning_rate = j.at("learning_rate").get<double>();
  m.hyper.reg_weight = j.at("reg_weight").get<double>();
  m.hyper.seed = j.at("seed").get<std::uint64_t>();
  const int d = j.at("input_dim").get<int>();
  const auto rows = j.at("w1").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(rows.size()) != d) throw std::invalid_argument("victim: bad w1 shape");
  m.w1.resize(d, m.hyper.hidden_dim);
  for (int r = 0; r < d; ++r) {
    if (static_cast<int>(rows[r].size()) != m.hyper.hidden_dim) {
      throw std::invalid_argument("victim: bad w1 shape");
    }
    for (int c = 0; c < m.hyper.hidden_dim; ++c) m.w1(r, c) = rows[r][c];
  }
  const auto w2 = j.at("w2").get<std::vector<double>>();
  if (static_cast<int>(w2.size()) != m.hyper.hidden_dim) {
    throw std::invalid_argument("victim: bad w2 shape");
  }
  m.w2 = Eigen::Map<const Eigen::VectorXd>(w2.data(), w2.size());
  return m;
}

}  // namespace gfair
