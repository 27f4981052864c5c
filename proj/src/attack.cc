#include "gfair/attack.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "gfair/io_util.h"

namespace gfair {
namespace {

double node_ce(double logit, int label) {
  const double p = std::clamp(logistic(logit), kProbClamp, 1.0 - kProbClamp);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double mean_ce(const Eigen::VectorXd& logits, const Graph& graph,
               const std::vector<int>& nodes) {
  double sum = 0.0;
  for (int i : nodes) sum += node_ce(logits[i], *graph.label(i));
  return sum / static_cast<double>(nodes.size());
}

double parity_gap(const int count[2], const int pos[2]) {
  return std::abs(static_cast<double>(pos[0]) / count[0] -
                  static_cast<double>(pos[1]) / count[1]);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int EdgeBudget::resolve(int num_edges) const {
  if (absolute) return *absolute;
  return std::max(1, static_cast<int>(std::floor(fraction * num_edges)));
}

double UtilityBudget::resolve(double clean_loss) const {
  return kind == Kind::kRelative ? value * clean_loss : value;
}

CandidateLimit CandidateSpec::resolve(int num_nodes) const {
  switch (kind) {
    case Kind::kAll:
      return CandidateLimit::all();
    case Kind::kCount:
      return CandidateLimit::top(static_cast<long>(value));
    case Kind::kFraction: {
      const double pairs = 0.5 * num_nodes * (num_nodes - 1.0);
      return CandidateLimit::top(
          std::max(1L, static_cast<long>(std::floor(value * pairs))));
    }
  }
  throw std::logic_error("unreachable candidate kind");
}

std::string_view to_string(AttackMode mode) {
  return mode == AttackMode::kEvasion ? "evasion" : "poisoning";
}

std::string_view to_string(ScoringRule rule) {
  return rule == ScoringRule::kConstrained ? "constrained" : "unconstrained";
}

void AttackConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (budget.absolute) {
    if (*budget.absolute < 1) fail("budget: count must be >= 1");
  } else if (!(budget.fraction > 0.0 && budget.fraction <= 1.0)) {
    fail("budget: fraction must lie in (0,1]");
  }
  if (!(utility.value >= 0.0)) fail("utility budget: epsilon must be >= 0");
  if (candidates.kind == CandidateSpec::Kind::kCount && !(candidates.value >= 1.0)) {
    fail("candidates: count must be >= 1");
  }
  if (candidates.kind == CandidateSpec::Kind::kFraction &&
      !(candidates.value > 0.0 && candidates.value <= 1.0)) {
    fail("candidates: fraction must lie in (0,1]");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be finite and >= 0");
  if (!(bandwidth > 0.0)) fail("bandwidth must be positive");
  if (grid_size < 2) fail("grid_size must be >= 2");
  if (train_epochs < 0) fail("train_epochs must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (retrain_epochs < 0) fail("retrain_epochs must be >= 0");
  if (num_threads < 1) fail("num_threads must be >= 1");
}

TrainOptions AttackConfig::train_options() const {
  TrainOptions o;
  o.alpha = alpha;
  o.bandwidth = bandwidth;
  o.grid_size = grid_size;
  o.epochs = train_epochs;
  o.learning_rate = learning_rate;
  o.seed = seed;
  return o;
}

nlohmann::json to_json(const AttackConfig& c) {
  nlohmann::json j;
  j["budget"] = c.budget.absolute ? nlohmann::json{{"count", *c.budget.absolute}}
                                  : nlohmann::json{{"fraction", c.budget.fraction}};
  if (std::isinf(c.utility.value)) {
    j["utility"] = "unlimited";
  } else if (c.utility.kind == UtilityBudget::Kind::kRelative) {
    j["utility"] = {{"relative", c.utility.value}};
  } else {
    j["utility"] = {{"absolute", c.utility.value}};
  }
  switch (c.candidates.kind) {
    case CandidateSpec::Kind::kAll: j["candidates"] = "all"; break;
    case CandidateSpec::Kind::kCount:
      j["candidates"] = {{"count", static_cast<long>(c.candidates.value)}};
      break;
    case CandidateSpec::Kind::kFraction:
      j["candidates"] = {{"fraction", c.candidates.value}};
      break;
  }
  j["scoring"] = std::string(to_string(c.scoring));
  j["mode"] = std::string(to_string(c.mode));
  j["alpha"] = c.alpha;
  j["bandwidth"] = c.bandwidth;
  j["grid_size"] = c.grid_size;
  j["train_epochs"] = c.train_epochs;
  j["learning_rate"] = c.learning_rate;
  j["retrain_epochs"] = c.retrain_epochs;
  j["num_threads"] = c.num_threads;
  j["seed"] = c.seed;
  return j;
}

namespace {

// Single-key object such as {"relative": 0.05}.
std::pair<std::string, nlohmann::json> single_entry(const nlohmann::json& j,
                                                    const std::string& field) {
  if (!j.is_object() || j.size() != 1) {
    throw std::invalid_argument(field + ": expected an object with one key");
  }
  return {j.begin().key(), j.begin().value()};
}

}  // namespace

AttackConfig attack_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "budget", "utility", "candidates", "scoring", "mode",
      "alpha", "bandwidth", "grid_size", "train_epochs", "learning_rate",
      "retrain_epochs", "num_threads", "seed"};
  if (!j.is_object()) throw std::invalid_argument("attack config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("attack: unknown key '" + key + "'");
  }
  AttackConfig c;
  try {
    if (j.contains("budget")) {
      const auto [k, v] = single_entry(j["budget"], "budget");
      if (k == "count") c.budget = EdgeBudget::count(v.get<int>());
      else if (k == "fraction") c.budget = EdgeBudget::of_edges(v.get<double>());
      else throw std::invalid_argument("budget: expected 'count' or 'fraction'");
    }
    if (j.contains("utility")) {
      const auto& u = j["utility"];
      if (u.is_string() && u.get<std::string>() == "unlimited") {
        c.utility = UtilityBudget::unlimited();
      } else {
        const auto [k, v] = single_entry(u, "utility");
        if (k == "relative") c.utility = UtilityBudget::relative(v.get<double>());
        else if (k == "absolute") c.utility = UtilityBudget::absolute(v.get<double>());
        else throw std::invalid_argument("utility: expected 'relative' or 'absolute'");
      }
    }
    if (j.contains("candidates")) {
      const auto& a = j["candidates"];
      if (a.is_string() && a.get<std::string>() == "all") {
        c.candidates = CandidateSpec::all();
      } else {
        const auto [k, v] = single_entry(a, "candidates");
        if (k == "count") c.candidates = CandidateSpec::count(v.get<long>());
        else if (k == "fraction") c.candidates = CandidateSpec::fraction(v.get<double>());
        else throw std::invalid_argument("candidates: expected 'all', 'count' or 'fraction'");
      }
    }
    if (j.contains("scoring")) {
      const auto s = j["scoring"].get<std::string>();
      if (s == "constrained") c.scoring = ScoringRule::kConstrained;
      else if (s == "unconstrained") c.scoring = ScoringRule::kUnconstrained;
      else throw std::invalid_argument("scoring: unknown rule '" + s + "'");
    }
    if (j.contains("mode")) {
      const auto s = j["mode"].get<std::string>();
      if (s == "evasion") c.mode = AttackMode::kEvasion;
      else if (s == "poisoning") c.mode = AttackMode::kPoisoning;
      else throw std::invalid_argument("mode: unknown mode '" + s + "'");
    }
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("bandwidth")) c.bandwidth = j["bandwidth"].get<double>();
    if (j.contains("grid_size")) c.grid_size = j["grid_size"].get<int>();
    if (j.contains("train_epochs")) c.train_epochs = j["train_epochs"].get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("retrain_epochs")) c.retrain_epochs = j["retrain_epochs"].get<int>();
    if (j.contains("num_threads")) c.num_threads = j["num_threads"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("attack config: ") + e.what());
  }
  c.validate();
  return c;
}

AttackState::AttackState(Graph g, Eigen::VectorXd theta0)
    : graph(std::move(g)), theta(std::move(theta0)) {
  zf = aggregate(graph);
  clean_z = zf.Z;
  train = graph.nodes_in(Split::kTrain);
  test = graph.nodes_in(Split::kTest);
  if (train.empty()) throw std::invalid_argument("attack: empty train set");
  refresh();
  clean_l = current_l;
  clean_lf = current_lf;
}

void AttackState::refresh() {
  logits = compute_logits(zf.Z, theta);
  current_l = mean_ce(logits, graph, train);
  reference_l = mean_ce(compute_logits(clean_z, theta), graph, train);
  test_count[0] = test_count[1] = 0;
  test_pos[0] = test_pos[1] = 0;
  for (int i : test) {
    ++test_count[graph.sensitive(i)];
    test_pos[graph.sensitive(i)] += logits[i] >= 0.0;
  }
  if (test_count[0] == 0 || test_count[1] == 0) {
    throw std::invalid_argument("attack: sensitive group with no test nodes");
  }
  current_lf = parity_gap(test_count, test_pos);
}

ScoreRound score_candidates(const AttackState& state,
                            const std::vector<NodePair>& candidates,
                            ScoringRule rule, int num_threads,
                            WorkCounters* counters) {
  if (candidates.empty()) throw std::invalid_argument("score_candidates: no candidates");
  const std::size_t k = candidates.size();
  ScoreRound round;
  round.candidates = candidates;
  round.p.assign(k, 0.0);
  round.q.assign(k, 0.0);
  std::vector<long> rows(k, 0);
  const double inv_train = 1.0 / static_cast<double>(state.train.size());

  auto evaluate = [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const FlipDelta delta =
          incremental_flip_z(state.graph, state.zf, candidates[c].u, candidates[c].v);
      double dl = 0.0;
      int pos[2] = {state.test_pos[0], state.test_pos[1]};
      for (std::size_t r = 0; r < delta.touched_rows.size(); ++r) {
        const int i = delta.touched_rows[r];
        const double old_logit = state.logits[i];
        const double new_logit =
            delta.new_rows.row(static_cast<Eigen::Index>(r)).dot(state.theta);
        switch (state.graph.split(i)) {
          case Split::kTrain: {
            const int y = *state.graph.label(i);
            dl += (node_ce(new_logit, y) - node_ce(old_logit, y)) * inv_train;
            break;
          }
          case Split::kTest:
            pos[state.graph.sensitive(i)] +=
                static_cast<int>(new_logit >= 0.0) - static_cast<int>(old_logit >= 0.0);
            break;
          case Split::kVal:
            break;
        }
      }
      round.p[c] = dl;
      round.q[c] = parity_gap(state.test_count, pos) - state.current_lf;
      rows[c] = static_cast<long>(delta.touched_rows.size());
    }
  };

  const int threads = std::max(1, std::min<int>(num_threads, static_cast<int>(k)));
  if (threads == 1) {
    evaluate(0, k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (k + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(k, t * chunk);
      const std::size_t end = std::min(k, begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          evaluate(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  if (counters) {
    counters->candidates_evaluated += static_cast<long>(k);
    counters->rows_updated += std::accumulate(rows.begin(), rows.end(), 0L);
  }

  round.scores = round.q;
  if (rule == ScoringRule::kConstrained) {
    double pp = 0.0, pq = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      pp += round.p[c] * round.p[c];
      pq += round.p[c] * round.q[c];
    }
    round.c = pp > 0.0 ? pq / pp : 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      round.scores[c] = round.q[c] - round.c * std::abs(round.p[c]);
    }
  }
  return round;
}

std::vector<std::size_t> rank_scores(const ScoreRound& round) {
  std::vector<std::size_t> order(round.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (round.scores[a] != round.scores[b]) return round.scores[a] > round.scores[b];
    return round.candidates[a] < round.candidates[b];
  });
  return order;
}

AttackResult run_attack(const Graph& graph, const AttackConfig& config,
                        const std::optional<SurrogateModel>& pretrained) {
  config.validate();
  AttackResult result(graph);
  result.initial_model =
      pretrained ? *pretrained : train_surrogate(graph, config.train_options());
  AttackState state(graph, result.initial_model.theta);
  result.budget = config.budget.resolve(graph.num_edges());
  result.epsilon = config.utility.resolve(state.clean_l);
  result.clean_l = state.clean_l;
  result.clean_lf = state.clean_lf;
  const CandidateLimit limit = config.candidates.resolve(graph.num_nodes());
  TrainOptions retrain = config.train_options();
  retrain.epochs = config.retrain_epochs;

  result.stop_reason = "budget exhausted";
  for (int t = 0; t < result.budget; ++t) {
    RoundStats stats;
    stats.round = t;
    auto start = Clock::now();
    std::vector<NodePair> candidates;
    try {
      candidates = build_candidates(state.graph, state.logits, limit,
                                    state.flipped, &result.counters);
    } catch (const std::runtime_error& e) {
      result.stop_reason = e.what();
      break;
    }
    stats.ranking_seconds = seconds_since(start);
    start = Clock::now();
    const ScoreRound round = score_candidates(state, candidates, config.scoring,
                                              config.num_threads, &result.counters);
    stats.score_seconds = seconds_since(start);
    stats.candidates_evaluated = static_cast<long>(candidates.size());

    // Highest score first; a candidate breaking the utility budget yields to
    // the next one. A negative best score ends the attack; ties at zero are
    // still committed.
    std::optional<std::size_t> chosen;
    bool any_qualifying = false;
    for (std::size_t idx : rank_scores(round)) {
      if (!(round.scores[idx] >= 0.0)) break;
      any_qualifying = true;
      const double l_after = state.current_l + round.p[idx];
      if (std::abs(l_after - state.reference_l) <= result.epsilon) {
        chosen = idx;
        break;
      }
    }
    if (!chosen) {
      result.stop_reason =
          any_qualifying ? "every non-negative-score candidate violates the utility budget"
                         : "no candidate with non-negative score";
      break;
    }

    const NodePair pick = round.candidates[*chosen];
    const FlipDelta delta = commit_flip(state.graph, state.zf, pick.u, pick.v);
    EdgeFlip flip{pick.u, pick.v, delta.kind, t};
    state.flips.push_back(flip);
    state.flipped.insert(pick);
    state.refresh();

    TraceRow row;
    row.t = t;
    row.flip = flip;
    row.delta_lf = round.q[*chosen];
    row.delta_l = round.p[*chosen];
    row.score = round.scores[*chosen];
    row.lf = state.current_lf;
    row.l = state.current_l;
    row.l_reference = state.reference_l;
    state.trace.push_back(row);

    if (config.mode == AttackMode::kPoisoning) {
      const SurrogateModel next =
          train_surrogate(state.graph, state.zf, retrain, state.theta);
      state.theta = next.theta;
      state.refresh();
    }
    stats.objective = state.current_lf;
    result.rounds.push_back(stats);
  }

  result.final_l = state.current_l;
  result.final_lf = state.current_lf;
  result.final_theta = state.theta;
  result.flips = std::move(state.flips);
  result.trace = std::move(state.trace);
  result.poisoned = std::move(state.graph);
  return result;
}

Eigen::VectorXd pgd_step_closed_form(const Eigen::VectorXd& grad_l,
                                     const Eigen::VectorXd& grad_lf,
                                     const Eigen::VectorXd& a_t, double eta,
                                     double eps_t) {
  if (!(eta > 0.0)) throw std::invalid_argument("pgd: eta must be positive");
  if (!(eps_t >= 0.0)) throw std::invalid_argument("pgd: eps must be >= 0");
  const double s = grad_l.dot(grad_lf);
  Eigen::VectorXd out = a_t + eta * grad_lf;
  if (eta * std::abs(s) <= eps_t) return out;
  const double norm2 = grad_l.squaredNorm();
  if (norm2 == 0.0) throw std::invalid_argument("pgd: zero utility gradient");
  const double e = s > 0 ? 1.0 : -1.0;
  out += (e * eps_t - eta * s) / norm2 * grad_l;
  return out;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << "t,u,v,kind,delta_Lf,delta_L,score,Lf,L\n";
  for (const TraceRow& r : trace) {
    os << r.t << ',' << r.flip.u << ',' << r.flip.v << ',' << to_string(r.flip.kind)
       << ',' << format_double(r.delta_lf) << ',' << format_double(r.delta_l) << ','
       << format_double(r.score) << ',' << format_double(r.lf) << ','
       << format_double(r.l) << '\n';
  }
  return os.str();
}

nlohmann::json flips_json(const std::vector<EdgeFlip>& flips) {
  nlohmann::json arr = nlohmann::json::array();
  for (const EdgeFlip& f : flips) {
    arr.push_back({{"u", f.u}, {"v", f.v}, {"kind", std::string(to_string(f.kind))},
                   {"iteration", f.iteration}});
  }
  return arr;
}

std::vector<EdgeFlip> flips_from_json(const nlohmann::json& j) {
  std::vector<EdgeFlip> out;
  for (const auto& e : j) {
    EdgeFlip f;
    f.u = e.at("u").get<int>();
    f.v = e.at("v").get<int>();
    const auto kind = e.at("kind").get<std::string>();
    if (kind == "add") f.kind = FlipKind::kAdd;
    else if (kind == "remove") f.kind = FlipKind::kRemove;
    else throw std::invalid_argument("flip kind must be add or remove");
    f.iteration = e.at("iteration").get<int>();
    out.push_back(f);
  }
  return out;
}

}  // namespace gfair
