#pragma once

#include <utility>

#include "diffbound/ate_bounds.hpp"
#include "diffbound/dataset.hpp"
#include "diffbound/kernel.hpp"
#include "diffbound/propensity.hpp"

namespace diffbound {

// One kernel per estimator role: k1 smooths the (1,0) cell, k2 the (0,1)
// cell, k3 the weighted full-sample regression.
struct CateKernels {
  KernelSpec k1, k2, k3;
};

struct DensityEstimates {
  double f10_hat = 0.0;
  double f01_hat = 0.0;
  double f_hat = 0.0;
};

struct CateEstimate {
  double x0 = 0.0;
  int cov_index = 0;
  double mu1x = 0.0;
  double mu2x = 0.0;
  double tau_minus_x = 0.0;
  double tau_plus_x = 0.0;
  double sigma1x_hat = 0.0;
  double sigma2x_hat = 0.0;
  double h1 = 0.0, h2 = 0.0, h3 = 0.0;
  Direction direction = Direction::Mu2Upper;
  bool crossed = false;
};

// Conditioning is on a single designated covariate column; multivariate
// product kernels are out of scope.

// Difference of the two cell regressions m10(x0) - m01(x0).
double mu1_at(const Dataset& d, double x0, const KernelSpec& k1,
              const KernelSpec& k2, int cov_index);

// Kernel regression of the weighting terms on the conditioning covariate.
double mu2_at(const Dataset& d, const PropensityModel& m, double x0,
              const KernelSpec& k3, int cov_index);

DensityEstimates cate_densities(const Dataset& d, double x0,
                                const CateKernels& kernels, int cov_index);

// Plug-in variance pair (sigma1^2(x0), sigma2^2(x0)):
//   sigma1^2 = s10^2 |K1|^2 / f10 + s01^2 |K2|^2 / f01
//   sigma2^2 = sphi^2 |K3|^2 / f
// where s10^2 and s01^2 are kernel-weighted cell residual variances and
// sphi^2 is, by default, the global n^{-2} sum of squared deviations of the
// weighting terms around mu2(x0), exactly as displayed in the source
// formulas. weighted_phi_variance = true switches sphi^2 to the localized
// kernel-weighted form for sensitivity checks.
std::pair<double, double> cate_variances(const Dataset& d,
                                         const PropensityModel& m, double x0,
                                         const CateKernels& kernels,
                                         int cov_index,
                                         bool weighted_phi_variance = false);

CateEstimate cate_bounds(const Dataset& d, const PropensityModel& m, double x0,
                         const CateKernels& kernels, int cov_index,
                         Direction direction,
                         bool weighted_phi_variance = false);

}  // namespace diffbound
