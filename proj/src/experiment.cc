#include "gfair/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "gfair/baselines.h"
#include "gfair/io_util.h"
#include "gfair/seeds.h"

namespace gfair {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(AttackMethod method) {
  switch (method) {
    case AttackMethod::kGFair: return "gfair";
    case AttackMethod::kGreedyUnconstrained: return "greedy_unconstrained";
    case AttackMethod::kRandom: return "random";
    case AttackMethod::kFaGnn: return "fagnn";
  }
  return "unknown";
}

namespace {

AttackMethod parse_method(const std::string& s) {
  if (s == "gfair") return AttackMethod::kGFair;
  if (s == "greedy_unconstrained") return AttackMethod::kGreedyUnconstrained;
  if (s == "random") return AttackMethod::kRandom;
  if (s == "fagnn") return AttackMethod::kFaGnn;
  throw ConfigError("attack.method: unknown method '" + s + "'");
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

CandidateSpec parse_candidate_spec(const json& j) {
  if (j.is_string() && j.get<std::string>() == "all") return CandidateSpec::all();
  if (j.is_object() && j.size() == 1) {
    const std::string key = j.begin().key();
    if (key == "count") return CandidateSpec::count(j.begin().value().get<long>());
    if (key == "fraction") return CandidateSpec::fraction(j.begin().value().get<double>());
  }
  throw ConfigError("benchmark.candidates: entries must be \"all\", {\"count\": n} or {\"fraction\": f}");
}

json candidate_spec_json(const CandidateSpec& c) {
  switch (c.kind) {
    case CandidateSpec::Kind::kAll: return "all";
    case CandidateSpec::Kind::kCount: return {{"count", static_cast<long>(c.value)}};
    case CandidateSpec::Kind::kFraction: return {{"fraction", c.value}};
  }
  return nullptr;
}

std::string candidate_label(const CandidateSpec& c) {
  switch (c.kind) {
    case CandidateSpec::Kind::kAll: return "all";
    case CandidateSpec::Kind::kCount:
      return "count-" + std::to_string(static_cast<long>(c.value));
    case CandidateSpec::Kind::kFraction: {
      std::ostringstream os;
      os << "fraction-" << c.value;
      return os.str();
    }
  }
  return "unknown";
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!dataset.sbm && (dataset.nodes_path.empty() || dataset.edges_path.empty())) {
    throw ConfigError("dataset: give either an sbm block or nodes and edges paths");
  }
  try {
    attack.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("attack: ") + e.what());
  }
  if (victims.empty()) throw ConfigError("victims: at least one victim is required");
  for (const VictimSpec& v : victims) {
    if (v.seeds.empty()) throw ConfigError("victims: every victim needs at least one seed");
    if (v.hyper.hidden_dim < 1) throw ConfigError("victims: hidden_dim must be >= 1");
    if (v.hyper.epochs < 0) throw ConfigError("victims: epochs must be >= 0");
    if (!(v.hyper.learning_rate > 0.0)) throw ConfigError("victims: learning_rate must be positive");
    if (!(v.hyper.reg_weight >= 0.0)) throw ConfigError("victims: reg_weight must be >= 0");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ExperimentConfig experiment_config_from_json(const json& j) {
  reject_unknown(j, {"version", "seed", "output_dir", "dataset", "attack", "victims",
                     "evaluation", "benchmark"},
                 "config");
  if (!j.contains("version")) throw ConfigError("config: missing 'version'");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != kConfigVersion) {
    throw ConfigError("config: unsupported version (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  ExperimentConfig c;
  try {
    read_if(j, "seed", c.seed);
    read_if(j, "output_dir", c.output_dir);

    if (!j.contains("dataset")) throw ConfigError("config: missing 'dataset'");
    const json& ds = j["dataset"];
    reject_unknown(ds, {"sbm", "nodes", "edges"}, "dataset");
    if (ds.contains("sbm")) {
      const json& s = ds["sbm"];
      reject_unknown(s, {"num_nodes", "feature_dim", "homophily", "label_noise",
                         "average_degree", "sensitive_shift", "label_homophily"},
                     "dataset.sbm");
      SbmOptions o;
      read_if(s, "num_nodes", o.num_nodes);
      read_if(s, "feature_dim", o.feature_dim);
      read_if(s, "homophily", o.homophily);
      read_if(s, "label_noise", o.label_noise);
      read_if(s, "average_degree", o.average_degree);
      read_if(s, "sensitive_shift", o.sensitive_shift);
      read_if(s, "label_homophily", o.label_homophily);
      c.dataset.sbm = o;
    }
    read_if(ds, "nodes", c.dataset.nodes_path);
    read_if(ds, "edges", c.dataset.edges_path);
    if (c.dataset.sbm && !c.dataset.nodes_path.empty()) {
      throw ConfigError("dataset: sbm and files are mutually exclusive");
    }

    if (j.contains("attack")) {
      json a = j["attack"];
      if (!a.is_object()) throw ConfigError("attack: expected an object");
      if (a.contains("seed")) {
        throw ConfigError("attack.seed: seeds derive from the top-level 'seed'");
      }
      if (a.contains("method")) {
        c.method = parse_method(a["method"].get<std::string>());
        a.erase("method");
      }
      try {
        c.attack = attack_config_from_json(a);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }

    if (j.contains("evaluation")) {
      const json& e = j["evaluation"];
      reject_unknown(e, {"mode"}, "evaluation");
      if (e.contains("mode")) {
        const std::string mode = e["mode"].get<std::string>();
        AttackMode m;
        if (mode == "evasion") m = AttackMode::kEvasion;
        else if (mode == "poisoning") m = AttackMode::kPoisoning;
        else throw ConfigError("evaluation.mode: unknown mode '" + mode + "'");
        if (j.contains("attack") && j["attack"].contains("mode") && m != c.attack.mode) {
          throw ConfigError("evaluation.mode disagrees with attack.mode");
        }
        c.attack.mode = m;
      }
    }

    if (j.contains("victims")) {
      if (!j["victims"].is_array()) throw ConfigError("victims: expected an array");
      for (const json& v : j["victims"]) {
        reject_unknown(v, {"kind", "hidden_dim", "epochs", "learning_rate", "reg_weight",
                           "seeds"},
                       "victims[]");
        VictimSpec spec;
        if (v.contains("kind")) {
          try {
            spec.kind = parse_victim_kind(v["kind"].get<std::string>());
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
        }
        read_if(v, "hidden_dim", spec.hyper.hidden_dim);
        read_if(v, "epochs", spec.hyper.epochs);
        read_if(v, "learning_rate", spec.hyper.learning_rate);
        read_if(v, "reg_weight", spec.hyper.reg_weight);
        read_if(v, "seeds", spec.seeds);
        c.victims.push_back(spec);
      }
    } else {
      c.victims.push_back(VictimSpec{});
    }

    if (j.contains("benchmark")) {
      const json& b = j["benchmark"];
      reject_unknown(b, {"candidates"}, "benchmark");
      if (b.contains("candidates")) {
        for (const json& e : b["candidates"]) c.benchmark_sweep.push_back(parse_candidate_spec(e));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.benchmark_sweep.empty()) {
    c.benchmark_sweep = {CandidateSpec::all(), CandidateSpec::fraction(1e-2),
                         CandidateSpec::fraction(5e-3), CandidateSpec::fraction(1e-3),
                         CandidateSpec::fraction(5e-4)};
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = kConfigVersion;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  if (c.dataset.sbm) {
    const SbmOptions& o = *c.dataset.sbm;
    j["dataset"] = {{"sbm",
                     {{"num_nodes", o.num_nodes},
                      {"feature_dim", o.feature_dim},
                      {"homophily", o.homophily},
                      {"label_noise", o.label_noise},
                      {"average_degree", o.average_degree},
                      {"sensitive_shift", o.sensitive_shift},
                      {"label_homophily", o.label_homophily}}}};
  } else {
    j["dataset"] = {{"nodes", c.dataset.nodes_path}, {"edges", c.dataset.edges_path}};
  }
  json attack = to_json(c.attack);
  attack.erase("seed");
  attack["method"] = std::string(to_string(c.method));
  j["attack"] = attack;
  json victims = json::array();
  for (const VictimSpec& v : c.victims) {
    victims.push_back({{"kind", std::string(to_string(v.kind))},
                       {"hidden_dim", v.hyper.hidden_dim},
                       {"epochs", v.hyper.epochs},
                       {"learning_rate", v.hyper.learning_rate},
                       {"reg_weight", v.hyper.reg_weight},
                       {"seeds", v.seeds}});
  }
  j["victims"] = victims;
  j["evaluation"] = {{"mode", std::string(to_string(c.attack.mode))}};
  json sweep = json::array();
  for (const CandidateSpec& s : c.benchmark_sweep) sweep.push_back(candidate_spec_json(s));
  j["benchmark"] = {{"candidates", sweep}};
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

std::uint64_t graph_seed(const ExperimentConfig& c) { return derive_seed(c.seed, "graph"); }
std::uint64_t surrogate_seed(const ExperimentConfig& c) {
  return derive_seed(c.seed, "surrogate");
}
std::uint64_t baseline_seed(const ExperimentConfig& c) { return derive_seed(c.seed, "attack"); }
std::uint64_t victim_seed(const ExperimentConfig& c, std::uint64_t replicate) {
  return derive_seed(c.seed, "victim-" + std::to_string(replicate));
}

Graph build_dataset(const ExperimentConfig& config) {
  if (config.dataset.sbm) {
    SbmOptions o = *config.dataset.sbm;
    o.seed = graph_seed(config);
    try {
      return generate_sbm(o);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("dataset.sbm: ") + e.what());
    }
  }
  return load_graph(config.dataset.nodes_path, config.dataset.edges_path);
}

ArtifactPaths artifact_paths(const std::string& dir) {
  const fs::path d(dir);
  auto p = [&](const char* name) { return (d / name).string(); };
  return {p("clean_nodes.csv"),     p("clean_edges.tsv"),  p("poisoned_nodes.csv"),
          p("poisoned_edges.tsv"),  p("trace.csv"),        p("flips.json"),
          p("attack_summary.json"), p("report.json"),      p("report.csv"),
          p("per_seed.csv"),        p("verification.json"), p("benchmark.csv")};
}

PatternBreakdown pattern_breakdown(const Graph& graph, const std::vector<EdgeFlip>& flips) {
  PatternBreakdown b;
  int counts[4] = {0, 0, 0, 0};
  for (const EdgeFlip& f : flips) {
    if (!graph.label(f.u) || !graph.label(f.v)) continue;
    ++counts[static_cast<int>(classify_edge_group(graph, f.u, f.v))];
    ++b.counted;
  }
  if (b.counted > 0) {
    const double scale = 100.0 / b.counted;
    b.ee = counts[static_cast<int>(EdgeGroup::kEE)] * scale;
    b.ed = counts[static_cast<int>(EdgeGroup::kED)] * scale;
    b.de = counts[static_cast<int>(EdgeGroup::kDE)] * scale;
    b.dd = counts[static_cast<int>(EdgeGroup::kDD)] * scale;
  }
  return b;
}

namespace {

json pattern_json(const PatternBreakdown& p) {
  if (p.counted == 0) {
    return {{"counted", 0}, {"EE", nullptr}, {"ED", nullptr}, {"DE", nullptr}, {"DD", nullptr}};
  }
  return {{"counted", p.counted}, {"EE", p.ee}, {"ED", p.ed}, {"DE", p.de}, {"DD", p.dd}};
}

json counters_json(const WorkCounters& w) {
  return {{"pairs_ranked", w.pairs_ranked},
          {"importance_evaluated", w.importance_evaluated},
          {"candidates_evaluated", w.candidates_evaluated},
          {"rows_updated", w.rows_updated}};
}

}  // namespace

AttackOutcome run_configured_attack(const ExperimentConfig& config, const Graph& graph) {
  AttackConfig ac = config.attack;
  ac.seed = surrogate_seed(config);
  json summary;
  summary["method"] = std::string(to_string(config.method));
  summary["mode"] = std::string(to_string(ac.mode));
  summary["num_nodes"] = graph.num_nodes();
  summary["clean_edges"] = graph.num_edges();
  AttackOutcome out{graph, graph, {}, {}, {}};
  switch (config.method) {
    case AttackMethod::kGFair:
    case AttackMethod::kGreedyUnconstrained: {
      AttackResult r = config.method == AttackMethod::kGFair
                           ? run_attack(graph, ac)
                           : greedy_unconstrained_attack(graph, ac);
      summary["budget"] = r.budget;
      summary["epsilon"] = std::isinf(r.epsilon) ? json(nullptr) : json(r.epsilon);
      summary["stop_reason"] = r.stop_reason;
      summary["clean_L"] = r.clean_l;
      summary["clean_Lf"] = r.clean_lf;
      summary["final_L"] = r.final_l;
      summary["final_Lf"] = r.final_lf;
      summary["work"] = counters_json(r.counters);
      summary["surrogate"] = to_json(r.initial_model);
      out.poisoned = std::move(r.poisoned);
      out.flips = std::move(r.flips);
      out.trace = std::move(r.trace);
      break;
    }
    case AttackMethod::kRandom:
    case AttackMethod::kFaGnn: {
      const int budget = ac.budget.resolve(graph.num_edges());
      BaselineResult r = config.method == AttackMethod::kRandom
                             ? random_attack(graph, budget, baseline_seed(config))
                             : fagnn_attack(graph, budget, baseline_seed(config));
      summary["budget"] = budget;
      summary["stop_reason"] = "budget exhausted";
      out.poisoned = std::move(r.poisoned);
      out.flips = std::move(r.flips);
      break;
    }
  }
  summary["flips"] = static_cast<int>(out.flips.size());
  summary["poisoned_edges"] = out.poisoned.num_edges();
  summary["pattern"] = pattern_json(pattern_breakdown(graph, out.flips));
  summary["config"] = to_json(config);
  out.summary = summary;
  return out;
}

void cmd_gen(const ExperimentConfig& config) {
  const Graph g = build_dataset(config);
  const ArtifactPaths p = artifact_paths(config.output_dir);
  save_graph(g, p.clean_nodes, p.clean_edges);
}

AttackOutcome cmd_attack(const ExperimentConfig& config) {
  AttackOutcome out = run_configured_attack(config, build_dataset(config));
  const ArtifactPaths p = artifact_paths(config.output_dir);
  save_graph(out.clean, p.clean_nodes, p.clean_edges);
  save_graph(out.poisoned, p.poisoned_nodes, p.poisoned_edges);
  write_file_atomic(p.trace, trace_csv(out.trace));
  write_file_atomic(p.flips, flips_json(out.flips).dump(2) + "\n");
  write_file_atomic(p.attack_summary, out.summary.dump(2) + "\n");
  return out;
}

namespace {

MetricSummary summarize(const std::vector<std::optional<double>>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (const auto& v : values) {
    if (!v) return s;
  }
  double mean = 0.0;
  for (const auto& v : values) mean += *v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const auto& v : values) var += (*v - mean) * (*v - mean);
  s.mean = mean;
  s.std = values.size() > 1 ? std::sqrt(var / (values.size() - 1.0)) : 0.0;
  return s;
}

json summary_json(const MetricSummary& s) {
  return {{"mean", s.mean ? json(*s.mean) : json(nullptr)},
          {"std", s.std ? json(*s.std) : json(nullptr)}};
}

std::string csv_field(const std::optional<double>& v) {
  return v ? format_double(*v) : "NA";
}

struct ReplicateResult {
  MetricReport clean, attacked;
  std::uint64_t clean_fingerprint = 0, attacked_fingerprint = 0;
};

}  // namespace

ExperimentReport evaluate_victims(const ExperimentConfig& config, const Graph& clean,
                                  const Graph& attacked,
                                  const std::vector<EdgeFlip>& flips) {
  const AttackMode mode = config.attack.mode;
  const std::vector<int> test = clean.nodes_in(Split::kTest);

  // Replicates are independent; run them concurrently and collect in order.
  std::vector<std::future<ReplicateResult>> futures;
  for (const VictimSpec& spec : config.victims) {
    for (std::uint64_t s : spec.seeds) {
      VictimHyper hyper = spec.hyper;
      hyper.seed = victim_seed(config, s);
      const VictimKind kind = spec.kind;
      futures.push_back(std::async(std::launch::async, [&, hyper, kind] {
        ReplicateResult r;
        const VictimModel normal = train_victim(clean, kind, hyper);
        r.clean = evaluate_victim(normal, clean, test, "test");
        r.clean_fingerprint = weight_fingerprint(normal);
        if (mode == AttackMode::kEvasion) {
          r.attacked = evaluate_victim(normal, attacked, test, "test");
          r.attacked_fingerprint = weight_fingerprint(normal);
          if (r.attacked_fingerprint != r.clean_fingerprint) {
            throw std::logic_error("evasion evaluation changed the victim weights");
          }
        } else {
          const VictimModel retrained = train_victim(attacked, kind, hyper);
          r.attacked = evaluate_victim(retrained, attacked, test, "test");
          r.attacked_fingerprint = weight_fingerprint(retrained);
        }
        return r;
      }));
    }
  }

  ExperimentReport report;
  report.mode = std::string(to_string(mode));
  report.pattern = pattern_breakdown(clean, flips);
  std::size_t next = 0;
  std::map<std::string, int> seen;
  for (const VictimSpec& spec : config.victims) {
    std::string name(to_string(spec.kind));
    if (seen[name]++ > 0) name += "-" + std::to_string(seen[name] - 1);
    std::vector<std::optional<double>> metric[2][4];
    for (std::uint64_t s : spec.seeds) {
      const ReplicateResult r = futures[next++].get();
      const MetricReport* stages[2] = {&r.clean, &r.attacked};
      const std::uint64_t prints[2] = {r.clean_fingerprint, r.attacked_fingerprint};
      for (int st = 0; st < 2; ++st) {
        const MetricReport& m = *stages[st];
        metric[st][0].push_back(m.acc);
        metric[st][1].push_back(m.auc);
        metric[st][2].push_back(m.delta_dp);
        metric[st][3].push_back(m.delta_eo);
        report.per_seed.push_back({name, s, st == 0 ? "clean" : "attacked", m, prints[st]});
      }
    }
    for (int st = 0; st < 2; ++st) {
      ReportRow row;
      row.victim = name;
      row.stage = st == 0 ? "clean" : "attacked";
      row.seeds = static_cast<int>(spec.seeds.size());
      row.acc = summarize(metric[st][0]);
      row.auc = summarize(metric[st][1]);
      row.delta_dp = summarize(metric[st][2]);
      row.delta_eo = summarize(metric[st][3]);
      report.rows.push_back(row);
    }
  }
  return report;
}

json to_json(const ExperimentReport& r) {
  json rows = json::array();
  for (const ReportRow& row : r.rows) {
    rows.push_back({{"victim", row.victim},
                    {"stage", row.stage},
                    {"seeds", row.seeds},
                    {"acc", summary_json(row.acc)},
                    {"auc", summary_json(row.auc)},
                    {"delta_dp", summary_json(row.delta_dp)},
                    {"delta_eo", summary_json(row.delta_eo)}});
  }
  json per_seed = json::array();
  for (const PerSeedRow& p : r.per_seed) {
    per_seed.push_back({{"victim", p.victim},
                        {"seed", p.seed},
                        {"stage", p.stage},
                        {"metrics", to_json(p.metrics)},
                        {"weight_fingerprint", p.fingerprint}});
  }
  return {{"mode", r.mode},
          {"rows", rows},
          {"per_seed", per_seed},
          {"pattern", pattern_json(r.pattern)},
          {"attack", r.attack_summary}};
}

void validate_report_json(const json& j) {
  auto fail = [](const std::string& what) { throw std::logic_error("report schema: " + what); };
  if (!j.is_object()) fail("not an object");
  if (!j.contains("mode") || !j["mode"].is_string()) fail("missing mode");
  const std::string mode = j["mode"];
  if (mode != "evasion" && mode != "poisoning") fail("bad mode");
  if (!j.contains("rows") || !j["rows"].is_array()) fail("missing rows");
  if (j["rows"].size() % 2 != 0) fail("rows must pair clean and attacked");
  for (const json& row : j["rows"]) {
    if (!row.contains("victim") || !row["victim"].is_string()) fail("row without victim");
    if (!row.contains("stage") || (row["stage"] != "clean" && row["stage"] != "attacked")) {
      fail("row with bad stage");
    }
    if (!row.contains("seeds") || !row["seeds"].is_number_integer() || row["seeds"] < 1) {
      fail("row with bad seed count");
    }
    for (const char* key : {"acc", "auc", "delta_dp", "delta_eo"}) {
      if (!row.contains(key) || !row[key].is_object()) fail(std::string("row without ") + key);
      const json& m = row[key];
      if (!m.contains("mean") || !m.contains("std")) fail(std::string(key) + " lacks mean/std");
      if (!m["mean"].is_null()) {
        if (!m["mean"].is_number()) fail(std::string(key) + " mean not numeric");
        const double v = m["mean"];
        if (!(v >= 0.0 && v <= 1.0)) fail(std::string(key) + " mean outside [0,1]");
      }
      if (!m["std"].is_null()) {
        if (!m["std"].is_number() || !(m["std"].get<double>() >= 0.0)) {
          fail(std::string(key) + " std negative");
        }
      }
    }
  }
  if (!j.contains("pattern") || !j["pattern"].is_object()) fail("missing pattern");
  const json& p = j["pattern"];
  if (p.value("counted", 0) > 0) {
    double total = 0.0;
    for (const char* key : {"EE", "ED", "DE", "DD"}) total += p.at(key).get<double>();
    if (std::abs(total - 100.0) > 0.1) fail("pattern percentages do not sum to 100");
  }
  if (!j.contains("per_seed") || !j["per_seed"].is_array()) fail("missing per_seed");
}

ExperimentReport cmd_evaluate(const ExperimentConfig& config) {
  const ArtifactPaths p = artifact_paths(config.output_dir);
  for (const std::string& path : {p.clean_nodes, p.clean_edges, p.poisoned_nodes,
                                  p.poisoned_edges, p.flips, p.attack_summary}) {
    if (!fs::exists(path)) {
      throw std::runtime_error("missing attack artifact: " + path +
                               " (run the attack command first)");
    }
  }
  const Graph clean = load_graph(p.clean_nodes, p.clean_edges);
  const Graph attacked = load_graph(p.poisoned_nodes, p.poisoned_edges);
  const std::vector<EdgeFlip> flips = flips_from_json(json::parse(read_file(p.flips)));
  const json summary = json::parse(read_file(p.attack_summary));
  if (summary.contains("mode") &&
      summary["mode"].get<std::string>() != to_string(config.attack.mode)) {
    throw ConfigError("evaluation mode differs from the mode the attack ran in");
  }
  ExperimentReport report = evaluate_victims(config, clean, attacked, flips);
  report.attack_summary = summary;

  const json j = to_json(report);
  validate_report_json(j);
  write_file_atomic(p.report_json, j.dump(2) + "\n");

  std::ostringstream csv;
  csv << "victim,stage,seeds,acc_mean,acc_std,auc_mean,auc_std,delta_dp_mean,"
         "delta_dp_std,delta_eo_mean,delta_eo_std\n";
  for (const ReportRow& r : report.rows) {
    csv << r.victim << ',' << r.stage << ',' << r.seeds;
    for (const MetricSummary* m : {&r.acc, &r.auc, &r.delta_dp, &r.delta_eo}) {
      csv << ',' << csv_field(m->mean) << ',' << csv_field(m->std);
    }
    csv << '\n';
  }
  write_file_atomic(p.report_csv, csv.str());

  std::ostringstream seeds;
  seeds << "victim,seed,stage,acc,auc,delta_dp,delta_eo,weight_fingerprint\n";
  for (const PerSeedRow& r : report.per_seed) {
    seeds << r.victim << ',' << r.seed << ',' << r.stage << ',' << csv_field(r.metrics.acc)
          << ',' << csv_field(r.metrics.auc) << ',' << csv_field(r.metrics.delta_dp) << ','
          << csv_field(r.metrics.delta_eo) << ',' << r.fingerprint << '\n';
  }
  write_file_atomic(p.per_seed_csv, seeds.str());
  return report;
}

VerificationReport cmd_verify_theorems(const VerifyOptions& options,
                                       const std::string& output_dir) {
  if (options.trials < 1) throw ConfigError("trials must be >= 1");
  const VerificationReport report = verify_theorems(options);
  if (!output_dir.empty()) {
    write_file_atomic(artifact_paths(output_dir).verification,
                      to_json(report).dump(2) + "\n");
  }
  return report;
}

std::vector<BenchmarkRow> cmd_benchmark(const ExperimentConfig& config) {
  const Graph graph = build_dataset(config);
  AttackConfig base = config.attack;
  base.seed = surrogate_seed(config);
  // One surrogate for the whole sweep so rows differ only in pruning.
  const SurrogateModel model = train_surrogate(graph, base.train_options());

  std::vector<BenchmarkRow> rows;
  const ArtifactPaths p = artifact_paths(config.output_dir);
  std::ostringstream summary;
  summary << "candidates,candidates_evaluated,importance_evaluated,ranking_time,"
             "score_time,wall_time,objective,flips\n";
  for (const CandidateSpec& spec : config.benchmark_sweep) {
    AttackConfig ac = base;
    ac.candidates = spec;
    const auto start = std::chrono::steady_clock::now();
    const AttackResult r =
        config.method == AttackMethod::kGreedyUnconstrained
            ? greedy_unconstrained_attack(graph, ac, model)
            : run_attack(graph, ac, model);
    BenchmarkRow row;
    row.candidates = candidate_label(spec);
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.candidates_evaluated = r.counters.candidates_evaluated;
    row.importance_evaluated = r.counters.importance_evaluated;
    for (const RoundStats& s : r.rounds) {
      row.ranking_seconds += s.ranking_seconds;
      row.score_seconds += s.score_seconds;
    }
    row.objective = r.final_lf;
    row.flips = static_cast<int>(r.flips.size());
    row.flip_sequence = r.flips;
    row.rounds = r.rounds;
    summary << row.candidates << ',' << row.candidates_evaluated << ','
            << row.importance_evaluated << ',' << format_double(row.ranking_seconds) << ','
            << format_double(row.score_seconds) << ',' << format_double(row.wall_seconds)
            << ',' << format_double(row.objective) << ',' << row.flips << '\n';

    std::ostringstream per_round;
    per_round << "round,candidates_evaluated,ranking_time,score_time,objective\n";
    for (const RoundStats& s : r.rounds) {
      per_round << s.round << ',' << s.candidates_evaluated << ','
                << format_double(s.ranking_seconds) << ',' << format_double(s.score_seconds)
                << ',' << format_double(s.objective) << '\n';
    }
    write_file_atomic((fs::path(config.output_dir) / ("benchmark_rounds_" + row.candidates +
                                                      ".csv"))
                          .string(),
                      per_round.str());
    rows.push_back(std::move(row));
  }
  write_file_atomic(p.benchmark_csv, summary.str());
  return rows;
}

}  // namespace gfair
