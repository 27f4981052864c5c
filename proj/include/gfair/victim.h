#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include "json.hpp"

#include "gfair/graph.h"
#include "gfair/metrics.h"

namespace gfair {

enum class VictimKind { kVanilla, kRegularized };

std::string_view to_string(VictimKind kind);
VictimKind parse_victim_kind(std::string_view text);

struct VictimHyper {
  int hidden_dim = 16;
  int epochs = 1000;
  double learning_rate = 1e-3;
  double reg_weight = 1.0;  // used by the regularized kind only
  std::uint64_t seed = 0;
};

// Two-layer GCN: H = relu(P X W1), logits = P H W2, where P weights the
// self-looped adjacency Â by 1 / (dhat_i dhat_j) as in aggregate().
struct VictimModel {
  VictimKind kind = VictimKind::kVanilla;
  RowMatrix w1;        // d_x x hidden
  Eigen::VectorXd w2;  // hidden
  VictimHyper hyper;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// P_ij = Â_ij / (dhat_i dhat_j).
SparseMatrix normalized_adjacency(const Graph& graph);

Eigen::VectorXd victim_logits(const VictimModel& model, const Graph& graph);

struct VictimLoss {
  double ce = 0.0;
  double fairness = 0.0;  // soft parity gap over train nodes
  double total = 0.0;
  RowMatrix grad_w1;
  Eigen::VectorXd grad_w2;
};

// CE over train, plus reg_weight times the soft parity gap for the
// regularized kind.
VictimLoss victim_loss(const VictimModel& model, const Graph& graph,
                       bool with_grad);

// Glorot-uniform initialization from the hyper seed, then full-batch Adam.
VictimModel train_victim(const Graph& graph, VictimKind kind,
                         const VictimHyper& hyper);

MetricReport evaluate_victim(const VictimModel& model, const Graph& graph,
                             const std::vector<int>& node_set,
                             const std::string& node_set_name);

// Hash of the weight bytes; equal models give equal fingerprints.
std::uint64_t weight_fingerprint(const VictimModel& model);

nlohmann::json to_json(const VictimModel& model);
VictimModel victim_from_json(const nlohmann::json& j);

}  // namespace gfair
