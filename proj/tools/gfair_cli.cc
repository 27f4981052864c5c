// Command-line front end: gen, attack, evaluate, verify-theorems, benchmark.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gfair/experiment.h"
#include "gfair/io_util.h"

namespace {

using nlohmann::json;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Flags shared by the experiment subcommands. Each one overrides the matching
// field of the JSON config (or of the built-in defaults).
struct Overrides {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::string nodes, edges;
  std::optional<int> num_nodes, feature_dim;
  std::optional<double> homophily, label_noise, label_homophily;
  std::string method, mode;
  std::optional<double> budget_fraction;
  std::optional<int> budget_count;
  std::optional<double> eps_relative, eps_absolute;
  bool eps_unlimited = false;
  std::string candidates;
  std::optional<int> grid_size, train_epochs, retrain_epochs, threads;
  std::vector<std::string> sweep;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config");
  cmd->add_option("--output-dir", o.output_dir, "Directory for artifacts");
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--nodes", o.nodes, "Nodes CSV (instead of a synthetic graph)");
  cmd->add_option("--edges", o.edges, "Edges TSV (instead of a synthetic graph)");
  cmd->add_option("--num-nodes", o.num_nodes, "Synthetic graph size");
  cmd->add_option("--feature-dim", o.feature_dim, "Synthetic attribute dimension");
  cmd->add_option("--homophily", o.homophily, "Synthetic intra-group edge share");
  cmd->add_option("--label-noise", o.label_noise, "Synthetic label flip probability");
  cmd->add_option("--label-homophily", o.label_homophily, "Synthetic same-label edge bias");
}

void add_attack(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--method", o.method, "gfair | greedy_unconstrained | random | fagnn");
  cmd->add_option("--mode", o.mode, "evasion | poisoning");
  cmd->add_option("--budget-fraction", o.budget_fraction, "Flip budget as a fraction of |E|");
  cmd->add_option("--budget-count", o.budget_count, "Flip budget as a count");
  cmd->add_option("--epsilon-relative", o.eps_relative, "Utility budget relative to clean loss");
  cmd->add_option("--epsilon-absolute", o.eps_absolute, "Absolute utility budget");
  cmd->add_flag("--epsilon-unlimited", o.eps_unlimited, "Disable the utility budget");
  cmd->add_option("--candidates", o.candidates, "all | count:N | fraction:F");
  cmd->add_option("--grid-size", o.grid_size, "KDE grid size");
  cmd->add_option("--train-epochs", o.train_epochs, "Surrogate training epochs");
  cmd->add_option("--retrain-epochs", o.retrain_epochs, "Poisoning retraining epochs");
  cmd->add_option("--threads", o.threads, "Threads for candidate scoring");
}

json candidate_json(const std::string& text) {
  if (text == "all") return "all";
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw gfair::ConfigError("--candidates: expected all, count:N or fraction:F");
  }
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  try {
    if (kind == "count") return {{"count", std::stol(value)}};
    if (kind == "fraction") return {{"fraction", std::stod(value)}};
  } catch (const std::exception&) {
  }
  throw gfair::ConfigError("--candidates: cannot parse '" + text + "'");
}

gfair::ExperimentConfig build_config(const Overrides& o) {
  json j;
  if (!o.config_path.empty()) {
    try {
      j = json::parse(gfair::read_file(o.config_path));
    } catch (const json::parse_error& e) {
      throw gfair::ConfigError(o.config_path + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw gfair::ConfigError(e.what());
    }
  } else {
    j = {{"version", gfair::kConfigVersion}, {"dataset", {{"sbm", json::object()}}}};
  }
  if (!j.is_object()) throw gfair::ConfigError("config must be a JSON object");
  if (!o.output_dir.empty()) j["output_dir"] = o.output_dir;
  if (o.seed) j["seed"] = *o.seed;
  if (!o.nodes.empty() || !o.edges.empty()) {
    j["dataset"] = {{"nodes", o.nodes}, {"edges", o.edges}};
  }
  auto sbm_field = [&](const char* key, const json& value) {
    if (!j["dataset"].contains("sbm")) {
      throw gfair::ConfigError(std::string("--") + key + " applies to synthetic graphs only");
    }
    j["dataset"]["sbm"][key] = value;
  };
  if (o.num_nodes) sbm_field("num_nodes", *o.num_nodes);
  if (o.feature_dim) sbm_field("feature_dim", *o.feature_dim);
  if (o.homophily) sbm_field("homophily", *o.homophily);
  if (o.label_noise) sbm_field("label_noise", *o.label_noise);
  if (o.label_homophily) sbm_field("label_homophily", *o.label_homophily);

  json& a = j["attack"];
  if (a.is_null()) a = json::object();
  if (!o.method.empty()) a["method"] = o.method;
  if (!o.mode.empty()) {
    a["mode"] = o.mode;
    if (j.contains("evaluation")) j["evaluation"]["mode"] = o.mode;
  }
  if (o.budget_fraction && o.budget_count) {
    throw gfair::ConfigError("give one of --budget-fraction and --budget-count");
  }
  if (o.budget_fraction) a["budget"] = {{"fraction", *o.budget_fraction}};
  if (o.budget_count) a["budget"] = {{"count", *o.budget_count}};
  const int eps_flags = (o.eps_relative ? 1 : 0) + (o.eps_absolute ? 1 : 0) + o.eps_unlimited;
  if (eps_flags > 1) throw gfair::ConfigError("give at most one utility budget flag");
  if (o.eps_relative) a["utility"] = {{"relative", *o.eps_relative}};
  if (o.eps_absolute) a["utility"] = {{"absolute", *o.eps_absolute}};
  if (o.eps_unlimited) a["utility"] = "unlimited";
  if (!o.candidates.empty()) a["candidates"] = candidate_json(o.candidates);
  if (o.grid_size) a["grid_size"] = *o.grid_size;
  if (o.train_epochs) a["train_epochs"] = *o.train_epochs;
  if (o.retrain_epochs) a["retrain_epochs"] = *o.retrain_epochs;
  if (o.threads) a["num_threads"] = *o.threads;
  if (!o.sweep.empty()) {
    json list = json::array();
    for (const std::string& s : o.sweep) list.push_back(candidate_json(s));
    j["benchmark"]["candidates"] = list;
  }
  return gfair::experiment_config_from_json(j);
}

void print_report(const gfair::ExperimentReport& r) {
  auto show = [](const gfair::MetricSummary& m) {
    if (!m.mean) return std::string("n/a");
    return gfair::format_double(*m.mean).substr(0, 8) + " +- " +
           gfair::format_double(*m.std).substr(0, 8);
  };
  for (const auto& row : r.rows) {
    std::cout << row.victim << " " << row.stage << ": acc " << show(row.acc) << ", auc "
              << show(row.auc) << ", dp " << show(row.delta_dp) << ", eo "
              << show(row.delta_eo) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial attacks on group fairness of graph node classifiers"};
  app.require_subcommand(1);

  Overrides gen_o, attack_o, eval_o, bench_o;
  CLI::App* gen = app.add_subcommand("gen", "Write a dataset to the output directory");
  add_common(gen, gen_o);

  CLI::App* attack = app.add_subcommand("attack", "Run an attack and write its artifacts");
  add_common(attack, attack_o);
  add_attack(attack, attack_o);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Train victims and compare clean vs attacked");
  add_common(evaluate, eval_o);
  add_attack(evaluate, eval_o);

  gfair::VerifyOptions verify_o;
  std::string verify_dir;
  CLI::App* verify = app.add_subcommand("verify-theorems", "Numerical checks of the fairness bounds");
  verify->add_option("--seed", verify_o.seed, "Root seed");
  verify->add_option("--trials", verify_o.trials, "Random density configurations");
  verify->add_option("--pgd-trials", verify_o.pgd_trials, "Random projection instances");
  verify->add_option("--witness-trials", verify_o.witness_trials, "Random flip-witness instances");
  verify->add_option("--grid-size", verify_o.grid_size, "KDE grid size");
  verify->add_option("--output-dir", verify_dir, "Directory for verification.json");

  CLI::App* bench = app.add_subcommand("benchmark", "Sweep the candidate count");
  add_common(bench, bench_o);
  add_attack(bench, bench_o);
  bench->add_option("--sweep", bench_o.sweep, "Candidate specs, e.g. all fraction:0.01");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      const auto config = build_config(gen_o);
      gfair::cmd_gen(config);
      std::cout << "wrote dataset to " << config.output_dir << "\n";
    } else if (*attack) {
      const auto config = build_config(attack_o);
      const auto out = gfair::cmd_attack(config);
      std::cout << "flips: " << out.flips.size() << " ("
                << out.summary.value("stop_reason", std::string()) << ")\n";
      if (out.summary.contains("final_Lf")) {
        std::cout << "L_f: " << out.summary["clean_Lf"].get<double>() << " -> "
                  << out.summary["final_Lf"].get<double>() << "\n";
      }
    } else if (*evaluate) {
      const auto config = build_config(eval_o);
      print_report(gfair::cmd_evaluate(config));
    } else if (*verify) {
      const auto report = gfair::cmd_verify_theorems(verify_o, verify_dir);
      for (const auto& c : report.checks) {
        std::cout << (c.ok() ? "PASS " : "FAIL ") << c.name << ": " << c.passed << "/"
                  << c.applicable << " (worst margin " << c.worst_margin << ")\n";
      }
      std::cout << (report.witnesses_found > 0 ? "PASS " : "FAIL ")
                << "flip_witness: " << report.witnesses_found << " of "
                << report.witness_trials << " instances\n";
    } else if (*bench) {
      const auto config = build_config(bench_o);
      for (const auto& row : gfair::cmd_benchmark(config)) {
        std::cout << row.candidates << ": evaluated " << row.candidates_evaluated
                  << ", objective " << row.objective << ", " << row.wall_seconds << " s\n";
      }
    }
  } catch (const gfair::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
