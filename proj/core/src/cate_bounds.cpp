#include "diffbound/cate_bounds.hpp"

#include <cmath>

namespace diffbound {

namespace {

Eigen::VectorXd column_at(const Dataset& d, int cov_index,
                          const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = d.x()(rows[k], cov_index);
  }
  return out;
}

Eigen::VectorXd values_at(const Eigen::VectorXd& v,
                          const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = v[rows[k]];
  }
  return out;
}

void check_cov_index(const Dataset& d, int cov_index) {
  if (cov_index < 0 || cov_index >= d.n_covariates()) {
    throw Error("cov_index " + std::to_string(cov_index) +
                " out of range for " + std::to_string(d.n_covariates()) +
                " covariates");
  }
}

}  // namespace

double mu1_at(const Dataset& d, double x0, const KernelSpec& k1,
              const KernelSpec& k2, int cov_index) {
  check_cov_index(d, cov_index);
  const auto rows10 = cell_rows(d, 1, 0);
  const auto rows01 = cell_rows(d, 0, 1);
  if (rows10.empty() || rows01.empty()) {
    throw Error("empty differential cell in mu1_at");
  }
  const double m10 = nw_regress(column_at(d, cov_index, rows10),
                                values_at(d.y(), rows10), x0, k1);
  const double m01 = nw_regress(column_at(d, cov_index, rows01),
                                values_at(d.y(), rows01), x0, k2);
  return m10 - m01;
}

double mu2_at(const Dataset& d, const PropensityModel& m, double x0,
              const KernelSpec& k3, int cov_index) {
  check_cov_index(d, cov_index);
  return nw_regress(d.x().col(cov_index), ipw_summands(d, m), x0, k3);
}

DensityEstimates cate_densities(const Dataset& d, double x0,
                                const CateKernels& kernels, int cov_index) {
  check_cov_index(d, cov_index);
  const auto rows10 = cell_rows(d, 1, 0);
  const auto rows01 = cell_rows(d, 0, 1);
  if (rows10.empty() || rows01.empty()) {
    throw Error("empty differential cell in cate_densities");
  }
  DensityEstimates out;
  out.f10_hat = kde(column_at(d, cov_index, rows10), x0, kernels.k1);
  out.f01_hat = kde(column_at(d, cov_index, rows01), x0, kernels.k2);
  out.f_hat = kde(d.x().col(cov_index), x0, kernels.k3);
  return out;
}

std::pair<double, double> cate_variances(const Dataset& d,
                                         const PropensityModel& m, double x0,
                                         const CateKernels& kernels,
                                         int cov_index,
                                         bool weighted_phi_variance) {
  check_cov_index(d, cov_index);
  const DensityEstimates dens = cate_densities(d, x0, kernels, cov_index);
  if (!(dens.f10_hat > 0.0) || !(dens.f01_hat > 0.0) || !(dens.f_hat > 0.0)) {
    throw Error("zero density estimate at the query point");
  }

  const auto rows10 = cell_rows(d, 1, 0);
  const auto rows01 = cell_rows(d, 0, 1);
  const Eigen::VectorXd x10 = column_at(d, cov_index, rows10);
  const Eigen::VectorXd x01 = column_at(d, cov_index, rows01);
  const Eigen::VectorXd y10 = values_at(d.y(), rows10);
  const Eigen::VectorXd y01 = values_at(d.y(), rows01);

  const double m10 = nw_regress(x10, y10, x0, kernels.k1);
  const double m01 = nw_regress(x01, y01, x0, kernels.k2);

  // Kernel-weighted residual variances around the local regressions.
  double s10 = 0.0;
  for (Eigen::Index i = 0; i < x10.size(); ++i) {
    const double w = kernel_eval(kernels.k1, (x0 - x10[i]) / kernels.k1.bandwidth) /
                     kernels.k1.bandwidth / dens.f10_hat;
    const double r = y10[i] - m10;
    s10 += w * r * r;
  }
  s10 /= static_cast<double>(x10.size());

  double s01 = 0.0;
  for (Eigen::Index i = 0; i < x01.size(); ++i) {
    const double w = kernel_eval(kernels.k2, (x0 - x01[i]) / kernels.k2.bandwidth) /
                     kernels.k2.bandwidth / dens.f01_hat;
    const double r = y01[i] - m01;
    s01 += w * r * r;
  }
  s01 /= static_cast<double>(x01.size());

  const Eigen::VectorXd phi = ipw_summands(d, m);
  const double mu2x = nw_regress(d.x().col(cov_index), phi, x0, kernels.k3);
  const double n = static_cast<double>(d.n());
  double sphi = 0.0;
  if (weighted_phi_variance) {
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
      const double w = kernel_eval(kernels.k3, (x0 - d.x()(i, cov_index)) /
                                                   kernels.k3.bandwidth) /
                       kernels.k3.bandwidth / dens.f_hat;
      const double r = phi[i] - mu2x;
      sphi += w * r * r;
    }
    sphi /= n;
  } else {
    // Global sum with the n^{-2} prefactor, as displayed.
    sphi = (phi.array() - mu2x).square().sum() / (n * n);
  }

  const double sigma1_sq =
      s10 * kernel_l2_norm_sq(kernels.k1.kind) / dens.f10_hat +
      s01 * kernel_l2_norm_sq(kernels.k2.kind) / dens.f01_hat;
  const double sigma2_sq = sphi * kernel_l2_norm_sq(kernels.k3.kind) / dens.f_hat;
  return {sigma1_sq, sigma2_sq};
}

CateEstimate cate_bounds(const Dataset& d, const PropensityModel& m, double x0,
                         const CateKernels& kernels, int cov_index,
                         Direction direction, bool weighted_phi_variance) {
  CateEstimate est;
  est.x0 = x0;
  est.cov_index = cov_index;
  est.h1 = kernels.k1.bandwidth;
  est.h2 = kernels.k2.bandwidth;
  est.h3 = kernels.k3.bandwidth;
  est.direction = direction;
  est.mu1x = mu1_at(d, x0, kernels.k1, kernels.k2, cov_index);
  est.mu2x = mu2_at(d, m, x0, kernels.k3, cov_index);
  const auto [v1, v2] =
      cate_variances(d, m, x0, kernels, cov_index, weighted_phi_variance);
  est.sigma1x_hat = std::sqrt(v1);
  est.sigma2x_hat = std::sqrt(v2);

  double lower = 0.0, upper = 0.0;
  switch (direction) {
    case Direction::Mu1Upper:
      upper = est.mu1x;
      lower = est.mu2x;
      break;
    case Direction::Mu2Upper:
      upper = est.mu2x;
      lower = est.mu1x;
      break;
    case Direction::Point:
      lower = std::min(est.mu1x, est.mu2x);
      upper = std::max(est.mu1x, est.mu2x);
      break;
  }
  if (lower > upper) {
    est.crossed = true;
    std::swap(lower, upper);
  }
  est.tau_minus_x = lower;
  est.tau_plus_x = upper;
  return est;
}

}  // namespace diffbound
