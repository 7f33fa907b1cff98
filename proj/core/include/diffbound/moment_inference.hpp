#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "diffbound/ate_bounds.hpp"
#include "diffbound/cate_bounds.hpp"
#include "diffbound/dataset.hpp"

namespace diffbound {

// Bootstrap replicates of the two bound estimators, role-ordered: w1 holds
// the estimator playing the lower-bound moment (its mean minus tau must be
// non-positive under the null), w2 the upper-bound moment. sigma1_hat and
// sigma2_hat are the full-sample sandwich standard errors, held fixed across
// replicates and tau. bootstrap_estimates enforces L >= 100; the test itself
// accepts any length, which is what the small fixed fixtures rely on.
struct BootstrapDraws {
  std::vector<double> w1;
  std::vector<double> w2;
  double sigma1_hat = 0.0;
  double sigma2_hat = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

struct CateQuery {
  double x0 = 0.0;
  int cov_index = 0;
  CateKernels kernels;  // bandwidths fixed from the full sample
};

struct BootstrapConfig {
  Estimator2 estimator2 = Estimator2::Ipw;
  std::optional<CateQuery> cate;  // when set, draws are the conditional estimators
  LogisticOptions logistic;
};

// Resample n rows with replacement per replicate (independent seeded streams
// derived from the master seed), refit the propensity model, recompute the
// estimator pair. Replicates with an empty differential cell, or whose refit
// fails, are redrawn up to 10 times before giving up. The returned draws are
// in estimator order (w1 = differential effect, w2 = weighting estimator);
// confidence_region maps them onto moment roles by direction.
BootstrapDraws bootstrap_estimates(const Dataset& d,
                                   const BootstrapConfig& config, int n_boot,
                                   std::uint64_t seed);

// Two-step bootstrap moment test of H0: E(lower - tau) <= 0 and
// E(tau - upper) <= 0. First stage builds a 1-beta confidence bound for the
// moment pair; if it already lies in the non-positive orthant the point is
// accepted outright, otherwise the slackness values feed the second-stage
// critical value at level 1 - alpha + beta. Returns true when tau is
// accepted. Requires 0 < beta < alpha < 1.
bool two_step_test(const BootstrapDraws& bd, double tau, double alpha,
                   double beta);

struct ConfidenceRegion {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  double beta = 0.005;
  int n_boot = 0;
  int grid_points = 0;
  // False when the accepted tau set had gaps; the reported interval is then
  // the hull of accepted points and callers should surface a warning.
  bool contiguous = true;
};

inline constexpr int kRegionGridPoints = 2001;

// Invert the test over a grid of kRegionGridPoints points spanning
// [min - 8*max(sigma), max + 8*max(sigma)] around the bootstrap means, then
// refine both endpoints by bisection to 1e-4 of the grid span. Errors when no
// tau is accepted.
ConfidenceRegion confidence_region(const BootstrapDraws& bd, double alpha,
                                   double beta, Direction direction);

}  // namespace diffbound
