#pragma once

#include <Eigen/Dense>

#include "diffbound/dataset.hpp"
#include "diffbound/propensity.hpp"

namespace diffbound {

// Which estimator plays the upper bound. The choice encodes the maintained
// monotonicity assumption; it is supplied by the analyst (optionally informed
// by the IRT diagnostics) and never inferred from the data.
enum class Direction {
  Mu1Upper,  // tau+ = mu1, tau- = mu2
  Mu2Upper,  // tau+ = mu2, tau- = mu1
  Point,     // mu1 and mu2 estimate the same quantity
};

enum class Estimator2 { Ipw, Aipw };

struct BoundsEstimate {
  double mu1_hat = 0.0;
  double mu2_hat = 0.0;
  double tau_minus = 0.0;
  double tau_plus = 0.0;
  double sigma1_hat = 0.0;
  double sigma2_hat = 0.0;
  Direction direction = Direction::Mu2Upper;
  Estimator2 estimator2 = Estimator2::Ipw;
  // True when the direction-assigned bounds came out of order in this sample;
  // the interval is reported order-corrected and the crossing is surfaced as
  // a warning rather than hidden.
  bool crossed = false;
};

// Difference in means across the differential cells (1,0) and (0,1).
double dim_estimate(const Dataset& d);

// Per-row inverse-probability-weighting terms
//   z1*y/p - (1-z1)*y/(1-p), with p the clipped fitted propensity.
Eigen::VectorXd ipw_summands(const Dataset& d, const PropensityModel& m);

double ipw_estimate(const Dataset& d, const PropensityModel& m);

// Augmented (doubly robust) per-row terms and estimate.
Eigen::VectorXd aipw_summands(const Dataset& d, const PropensityModel& m,
                              const OutcomeModel& o);

double aipw_estimate(const Dataset& d, const PropensityModel& m,
                     const OutcomeModel& o);

// Empirical sandwich variances. variance_dim requires at least two rows in
// each differential cell.
double variance_dim(const Dataset& d);
double variance_ipw(const Dataset& d, const PropensityModel& m);
double variance_aipw(const Dataset& d, const PropensityModel& m,
                     const OutcomeModel& o);

// Assemble the bound pair under the requested direction. An OutcomeModel is
// required only for Estimator2::Aipw.
BoundsEstimate ate_bounds(const Dataset& d, const PropensityModel& m,
                          Direction direction,
                          Estimator2 estimator2 = Estimator2::Ipw,
                          const OutcomeModel* outcome = nullptr);

}  // namespace diffbound
