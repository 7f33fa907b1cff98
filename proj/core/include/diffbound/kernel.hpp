#pragma once

#include <Eigen/Dense>
#include <vector>

namespace diffbound {

enum class KernelKind { Gaussian, Epanechnikov };

struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  double bandwidth = 1.0;  // finite and > 0
  int order = 2;           // both built-in kinds are second order
};

// K(u): gaussian (2*pi)^{-1/2} exp(-u^2/2); epanechnikov 0.75 (1-u^2) 1{|u|<=1}.
double kernel_eval(const KernelSpec& k, double u);

// Closed-form int K(u)^2 du: 1/(2*sqrt(pi)) for gaussian, 3/5 for epanechnikov.
double kernel_l2_norm_sq(KernelKind kind);

// Nadaraya-Watson regression of ys on xs at x0. Errors when the total kernel
// mass at x0 is zero (all points outside compact support, or underflow).
double nw_regress(const Eigen::Ref<const Eigen::VectorXd>& xs,
                  const Eigen::Ref<const Eigen::VectorXd>& ys, double x0,
                  const KernelSpec& k);

// Kernel density estimate (n*h)^{-1} sum K((x0 - xs_i)/h).
double kde(const Eigen::Ref<const Eigen::VectorXd>& xs, double x0,
           const KernelSpec& k);

// Leave-one-out cross-validation over the grid; returns the bandwidth with
// the smallest LOO squared prediction error, ties broken toward the smaller
// value. A grid value is skipped when some fold has zero leave-one-out mass;
// it is an error when every grid value is skipped.
double select_bandwidth_cv(const Eigen::Ref<const Eigen::VectorXd>& xs,
                           const Eigen::Ref<const Eigen::VectorXd>& ys,
                           KernelKind kind, const std::vector<double>& grid);

// 30 log-spaced points spanning [0.02, 5] times the sample SD of xs.
std::vector<double> default_bandwidth_grid(
    const Eigen::Ref<const Eigen::VectorXd>& xs);

}  // namespace diffbound
