#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gfair/attack.h"
#include "gfair/graph.h"
#include "gfair/metrics.h"
#include "gfair/sbm.h"
#include "gfair/verification.h"
#include "gfair/victim.h"

namespace gfair {

// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kConfigVersion = 1;

enum class AttackMethod { kGFair, kGreedyUnconstrained, kRandom, kFaGnn };

std::string_view to_string(AttackMethod method);

struct DatasetSource {
  std::optional<SbmOptions> sbm;
  std::string nodes_path;
  std::string edges_path;
};

struct VictimSpec {
  VictimKind kind = VictimKind::kRegularized;
  VictimHyper hyper;  // hyper.seed is replaced per replicate
  std::vector<std::uint64_t> seeds = {0};
};

struct ExperimentConfig {
  DatasetSource dataset;
  AttackMethod method = AttackMethod::kGFair;
  AttackConfig attack;
  std::vector<VictimSpec> victims;
  std::vector<CandidateSpec> benchmark_sweep;
  std::uint64_t seed = 0;
  std::string output_dir = "gfair-out";

  // Throws ConfigError.
  void validate() const;
  AttackMode mode() const { return attack.mode; }
};

// Parses a versioned config. Relative and absolute utility budgets are
// written {"relative": 0.05} and {"absolute": 0.01}. Throws ConfigError.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::string& path);

// Named sub-streams of the root seed.
std::uint64_t graph_seed(const ExperimentConfig& config);
std::uint64_t surrogate_seed(const ExperimentConfig& config);
std::uint64_t baseline_seed(const ExperimentConfig& config);
std::uint64_t victim_seed(const ExperimentConfig& config, std::uint64_t replicate);

Graph build_dataset(const ExperimentConfig& config);

// Artifact file names inside the output directory.
struct ArtifactPaths {
  std::string clean_nodes, clean_edges, poisoned_nodes, poisoned_edges, trace,
      flips, attack_summary, report_json, report_csv, per_seed_csv,
      verification, benchmark_csv;
};
ArtifactPaths artifact_paths(const std::string& output_dir);

// Percentages of EE/ED/DE/DD among flips whose endpoints are labeled.
struct PatternBreakdown {
  int counted = 0;
  double ee = 0.0, ed = 0.0, de = 0.0, dd = 0.0;
};
PatternBreakdown pattern_breakdown(const Graph& graph,
                                   const std::vector<EdgeFlip>& flips);

struct AttackOutcome {
  Graph clean;
  Graph poisoned;
  std::vector<EdgeFlip> flips;
  std::vector<TraceRow> trace;
  nlohmann::json summary;
};

// Runs the configured attack method on a graph without touching disk.
AttackOutcome run_configured_attack(const ExperimentConfig& config, const Graph& graph);

void cmd_gen(const ExperimentConfig& config);
AttackOutcome cmd_attack(const ExperimentConfig& config);

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> std;
};

struct ReportRow {
  std::string victim;
  std::string stage;  // clean or attacked
  MetricSummary acc, auc, delta_dp, delta_eo;
  int seeds = 0;
};

struct PerSeedRow {
  std::string victim;
  std::uint64_t seed = 0;
  std::string stage;
  MetricReport metrics;
  std::uint64_t fingerprint = 0;
};

struct ExperimentReport {
  std::string mode;
  std::vector<ReportRow> rows;
  std::vector<PerSeedRow> per_seed;
  PatternBreakdown pattern;
  nlohmann::json attack_summary;
};

// Evaluates victims on the clean and attacked graphs already on disk.
ExperimentReport cmd_evaluate(const ExperimentConfig& config);

// Evaluates victims on in-memory graphs.
ExperimentReport evaluate_victims(const ExperimentConfig& config, const Graph& clean,
                                  const Graph& attacked,
                                  const std::vector<EdgeFlip>& flips);

nlohmann::json to_json(const ExperimentReport& report);
// Throws std::logic_error describing the first schema violation.
void validate_report_json(const nlohmann::json& j);

VerificationReport cmd_verify_theorems(const VerifyOptions& options,
                                       const std::string& output_dir);

struct BenchmarkRow {
  std::string candidates;
  long candidates_evaluated = 0;
  long importance_evaluated = 0;
  double ranking_seconds = 0.0;
  double score_seconds = 0.0;
  double wall_seconds = 0.0;
  double objective = 0.0;
  int flips = 0;
  std::vector<EdgeFlip> flip_sequence;
  std::vector<RoundStats> rounds;
};

std::vector<BenchmarkRow> cmd_benchmark(const ExperimentConfig& config);

}  // namespace gfair
