#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffbound/ate_bounds.hpp"
#include "diffbound/dataset.hpp"

namespace diffbound {

enum class OutcomeKind { Homogeneous, Heterogeneous };

// One cell of the factorial generating process:
//   Z2 ~ Ber(1/2); C ~ Mult((0,1,2), (p, (1-p)/2, (1-p)/2));
//   Z1 = Z2 if C=0, 1 if C=1, 0 if C=2;
//   X | C = c ~ N(m_c 1_d, I_d) with m = (0, 0.25, 0.50);
//   U = kappa + delta Z2 + nu,  nu ~ N(0, sigma2_nu), eps ~ N(0, omega2_eps);
//   Y = theta Z1 + 1' X + U + eps                        (homogeneous)
//   Y = (alpha_het sin(X1/2) + beta_het) Z1 + 1' X + U + eps  (heterogeneous)
struct SimConfig {
  std::int64_t n = 1000;
  int d = 5;
  double p = 0.7;      // P(C = 0), in (0, 1)
  double delta = 0.0;  // loading of Z2 on U
  OutcomeKind outcome = OutcomeKind::Homogeneous;
  double kappa = 1.0;
  double sigma2_nu = 1.0;
  double omega2_eps = 1.0;
  double theta = 3.0;
  double alpha_het = 2.0;
  double beta_het = 2.5;
  std::uint64_t seed = 0;
};

Dataset generate(const SimConfig& cfg);

struct McValue {
  double value = 0.0;
  double se = 0.0;  // Monte Carlo standard error; zero for exact values
};

// Population average effect: theta exactly for the homogeneous model;
// alpha_het E[sin(X1/2)] + beta_het by 1e7-draw Monte Carlo over the mixture
// of X1 otherwise.
McValue true_ate(const SimConfig& cfg);

// Conditional effect at X1 = x1, exact in both models.
double true_cate(const SimConfig& cfg, double x1);

struct MuOracle {
  McValue mu1;
  McValue mu2;
};

// Population values of the two bound estimands from a single 1e7-row sample:
// the differential-effect contrast, and the weighting estimand evaluated with
// the exact conditional treatment probability P(Z1=1 | Z2, X) derived from
// the generating process (the mixture posterior over C given X), so no
// model-fitting error enters.
MuOracle mu_oracle(const SimConfig& cfg);

enum class CoverageTarget { Ate, CateAtOne };
enum class CoverageWhat { Bounds, Ci };

struct CoverageOptions {
  int reps = 200;        // at least 50
  int n_boot = 500;
  double alpha = 0.05;
  double beta = 0.005;
  CoverageTarget target = CoverageTarget::Ate;
  CoverageWhat what = CoverageWhat::Ci;
  Direction direction = Direction::Mu2Upper;
  std::uint64_t seed = 0;
};

struct CoverageRow {
  std::string label;
  int reps = 0;
  int failures = 0;         // replicates that errored; cell fails above 5%
  bool failed = false;
  double truth = 0.0;
  double bound_coverage = 0.0;
  double ci_coverage = 0.0;  // NaN when only bounds were requested
  double mean_lower = 0.0;   // mean of the covered interval's endpoints
  double mean_upper = 0.0;
};

// Full-pipeline coverage study over the given cells: generate, fit the logit
// propensity, estimate bounds (conditional bounds at X1 = 1 with
// cross-validated bandwidths for the CATE target), optionally invert the
// two-step test, and record whether the truth lies inside. Replicates run in
// parallel with per-replicate seeded streams; results are reduced in
// replicate order.
std::vector<CoverageRow> coverage_study(const std::vector<SimConfig>& cells,
                                        const CoverageOptions& options);

// Named cells of the factorial coverage tables at n = 1000, d = 5. Tables
// 1/2 are confidence-interval coverage for the average and conditional
// effects; tables 4/5 are raw-bound coverage. Cells 1-3 are the homogeneous
// outcome at p = 0.7/0.8/0.9, cells 4-6 the heterogeneous one; a "-delta1"
// suffix switches the confounder loading on. "table1-cell1" is therefore
// (homogeneous, p = 0.7, delta = 0, CI coverage of the average effect).
// Unknown names raise Error.
struct Preset {
  SimConfig config;
  CoverageTarget target = CoverageTarget::Ate;
  CoverageWhat what = CoverageWhat::Ci;
};
Preset preset_cell(const std::string& name);
std::vector<std::string> preset_names();

// Coverage table rendering.
std::string coverage_table_text(const std::vector<CoverageRow>& rows);
std::string coverage_table_csv(const std::vector<CoverageRow>& rows);

}  // namespace diffbound
