#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "gfair/fast_compute.h"
#include "gfair/graph.h"
#include "gfair/surrogate.h"

namespace gfair {

// Maximum number of flips: an absolute count or a fraction of |E|.
struct EdgeBudget {
  std::optional<int> absolute;
  double fraction = 0.05;

  static EdgeBudget count(int n) { return {n, 0.0}; }
  static EdgeBudget of_edges(double f) { return {std::nullopt, f}; }
  // max(1, floor(fraction * |E|)) or the absolute count.
  int resolve(int num_edges) const;
};

// Allowed |L(A') - L(A)| on the train cross-entropy.
struct UtilityBudget {
  enum class Kind { kRelative, kAbsolute };
  Kind kind = Kind::kRelative;
  double value = 0.05;

  static UtilityBudget relative(double f) { return {Kind::kRelative, f}; }
  static UtilityBudget absolute(double e) { return {Kind::kAbsolute, e}; }
  static UtilityBudget unlimited() {
    return {Kind::kAbsolute, std::numeric_limits<double>::infinity()};
  }
  double resolve(double clean_loss) const;
};

// Candidate count per round: all pairs, a fixed count, or a fraction of pairs.
struct CandidateSpec {
  enum class Kind { kAll, kCount, kFraction };
  Kind kind = Kind::kFraction;
  double value = 0.1;

  static CandidateSpec all() { return {Kind::kAll, 0.0}; }
  static CandidateSpec count(long a) { return {Kind::kCount, static_cast<double>(a)}; }
  static CandidateSpec fraction(double f) { return {Kind::kFraction, f}; }
  CandidateLimit resolve(int num_nodes) const;
};

enum class AttackMode { kEvasion, kPoisoning };
enum class ScoringRule { kConstrained, kUnconstrained };

std::string_view to_string(AttackMode mode);
std::string_view to_string(ScoringRule rule);

struct AttackConfig {
  EdgeBudget budget;
  UtilityBudget utility;
  CandidateSpec candidates;
  ScoringRule scoring = ScoringRule::kConstrained;
  AttackMode mode = AttackMode::kEvasion;
  double alpha = 1.0;
  double bandwidth = 0.1;
  int grid_size = 10000;
  int train_epochs = 2000;
  double learning_rate = 1e-3;
  int retrain_epochs = 200;
  int num_threads = 1;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  TrainOptions train_options() const;
};

nlohmann::json to_json(const AttackConfig& config);
AttackConfig attack_config_from_json(const nlohmann::json& j);

struct TraceRow {
  int t = 0;
  EdgeFlip flip;
  double delta_lf = 0.0;
  double delta_l = 0.0;
  double score = 0.0;
  double lf = 0.0;  // after the flip
  double l = 0.0;   // after the flip, same theta that selected it
  double l_reference = 0.0;  // L on the clean graph under that theta
};

// Mutable attack state; the caches always describe `graph`.
struct AttackState {
  Graph graph;
  AggregatedFeatures zf;
  RowMatrix clean_z;
  Eigen::VectorXd theta;
  Eigen::VectorXd logits;
  std::vector<int> train;
  std::vector<int> test;
  std::vector<EdgeFlip> flips;
  PairSet flipped;
  std::vector<TraceRow> trace;
  double clean_l = 0.0;   // L(theta0, A0)
  double clean_lf = 0.0;  // L_f(theta0, A0)
  double reference_l = 0.0;  // L(theta_t, A0)
  double current_l = 0.0;    // L(theta_t, A_t)
  double current_lf = 0.0;   // L_f(theta_t, A_t)
  int test_count[2] = {0, 0};
  int test_pos[2] = {0, 0};

  AttackState(Graph g, Eigen::VectorXd theta0);
  // Recomputes logits and loss bookkeeping after theta or the graph changed.
  void refresh();
};

struct ScoreRound {
  std::vector<NodePair> candidates;
  std::vector<double> p;  // delta L
  std::vector<double> q;  // delta L_f
  double c = 0.0;
  std::vector<double> scores;
};

// Exact loss differences for each candidate via the incremental path.
ScoreRound score_candidates(const AttackState& state,
                            const std::vector<NodePair>& candidates,
                            ScoringRule rule, int num_threads = 1,
                            WorkCounters* counters = nullptr);

// Candidate indices sorted by score descending, ties by canonical pair.
std::vector<std::size_t> rank_scores(const ScoreRound& round);

struct RoundStats {
  int round = 0;
  long candidates_evaluated = 0;
  double ranking_seconds = 0.0;
  double score_seconds = 0.0;
  double objective = 0.0;
};

struct AttackResult {
  explicit AttackResult(Graph g) : poisoned(std::move(g)) {}

  Graph poisoned;
  std::vector<EdgeFlip> flips;
  std::vector<TraceRow> trace;
  std::vector<RoundStats> rounds;
  std::string stop_reason;
  int budget = 0;
  double epsilon = 0.0;
  double clean_l = 0.0;
  double clean_lf = 0.0;
  double final_l = 0.0;
  double final_lf = 0.0;
  SurrogateModel initial_model;
  Eigen::VectorXd final_theta;
  WorkCounters counters;
};

// Greedy sequential attack. A pretrained surrogate (trained on the clean
// graph) may be supplied to share theta0 across paired runs.
AttackResult run_attack(const Graph& graph, const AttackConfig& config,
                        const std::optional<SurrogateModel>& pretrained =
                            std::nullopt);

// Projection of A + eta*grad_lf onto the slab |grad_l^T (A' - A)| <= eps.
// Throws std::invalid_argument when the constraint binds and grad_l = 0.
Eigen::VectorXd pgd_step_closed_form(const Eigen::VectorXd& grad_l,
                                     const Eigen::VectorXd& grad_lf,
                                     const Eigen::VectorXd& a_t, double eta,
                                     double eps_t);

std::string trace_csv(const std::vector<TraceRow>& trace);
nlohmann::json flips_json(const std::vector<EdgeFlip>& flips);
std::vector<EdgeFlip> flips_from_json(const nlohmann::json& j);

}  // namespace gfair
