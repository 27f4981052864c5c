#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace gfair {

// One inequality or equivalence checked over many random trials. `margin` is
// rhs - lhs (or tolerance - error), so negative means a violation.
struct TheoremCheck {
  std::string name;
  int trials = 0;
  int applicable = 0;  // trials meeting the check's precondition
  int passed = 0;
  double worst_margin = 0.0;
  double tolerance = 0.0;

  bool ok() const { return passed == applicable; }
};

struct VerificationReport {
  std::vector<TheoremCheck> checks;
  // Cases where the best gradient-guided flip lowers the objective while the
  // best exhaustively evaluated flip raises it.
  int witness_trials = 0;
  int witnesses_found = 0;
  // Informational: sample hard parity gaps above the KDE total variation.
  int sample_gap_above_tv = 0;
  double seconds = 0.0;

  bool all_passed() const;
};

nlohmann::json to_json(const VerificationReport& report);

struct VerifyOptions {
  std::uint64_t seed = 0;
  int trials = 100;         // density-bound sweep
  int pgd_trials = 50;
  int witness_trials = 2000;
  int grid_size = 10000;
};

// Random prediction configuration for the density-bound sweep.
struct PredictionSample {
  std::vector<double> predictions;
  std::vector<int> sensitive;
  double bandwidth = 0.1;
};

PredictionSample random_prediction_sample(std::uint64_t seed, int index);

// Bound checks on one sample, for reuse by tests.
struct DensityBounds {
  double tv = 0.0;
  double delta_dp = 0.0;  // from the KDE densities
  double sample_delta_dp = 0.0;
  double w1 = 0.0;
  double mi = 0.0;
  double min_marginal = 0.0;
  double marginal_floor = 0.0;  // Pr(S=0) Pr(S=1)
  double loose_condition = 0.0;
};

DensityBounds density_bounds(const PredictionSample& sample, int grid_size);

// Projection of y onto {x : |g^T (x - a)| <= eps} by Dykstra's alternating
// projections over the two half-spaces.
Eigen::VectorXd dykstra_slab_projection(const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& g,
                                        const Eigen::VectorXd& a, double eps,
                                        int max_iter = 10000, double tol = 1e-15);

VerificationReport verify_theorems(const VerifyOptions& options);

}  // namespace gfair
