#pragma once

#include <Eigen/Dense>

#include "diffbound/dataset.hpp"

namespace diffbound {

// Fitted probabilities are clipped to this range before they enter any
// weight denominator; substantive positivity violations are reported by
// check_positivity instead.
inline constexpr double kProbabilityClip = 1e-12;

// Logit model for P(Z1 = 1 | Z2, X) on the design [1, Z2, X].
struct PropensityModel {
  Eigen::VectorXd coefficients;  // intercept, z2, x1..xl
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;

  double predict(int z2, const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Clipped fitted probability for every row.
  Eigen::VectorXd fitted(const Dataset& d) const;
};

struct LogisticOptions {
  double tol = 1e-8;          // max absolute coefficient update
  int max_iterations = 100;
  double ridge = 0.0;         // optional penalty for ill-conditioned designs
};

// Maximum likelihood by iteratively reweighted least squares with step
// halving, so the log-likelihood never decreases between iterations.
PropensityModel fit_logistic(const Dataset& d, const LogisticOptions& options = {});

// Report-only check of fitted probabilities against [lo, hi].
ValidationReport check_positivity(const PropensityModel& m, const Dataset& d,
                                  double lo = 0.01, double hi = 0.99);

// Least-squares outcome regression on [1, Z1, Z2, X], used by the augmented
// weighting estimator.
struct OutcomeModel {
  Eigen::VectorXd coefficients;  // intercept, z1, z2, x1..xl

  double predict(int z1, int z2, const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

OutcomeModel fit_outcome_regression(const Dataset& d);

}  // namespace diffbound
