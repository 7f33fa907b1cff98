#include "diffbound/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "diffbound/dataset.hpp"
#include "diffbound/parallel.hpp"

namespace diffbound {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

void check_spec(const KernelSpec& k) {
  if (!(k.bandwidth > 0.0) || !std::isfinite(k.bandwidth)) {
    throw Error("kernel bandwidth must be finite and positive");
  }
}

}  // namespace

double kernel_eval(const KernelSpec& k, double u) {
  switch (k.kind) {
    case KernelKind::Gaussian:
      return kInvSqrt2Pi * std::exp(-0.5 * u * u);
    case KernelKind::Epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  throw Error("unknown kernel kind");
}

double kernel_l2_norm_sq(KernelKind kind) {
  switch (kind) {
    case KernelKind::Gaussian:
      return 0.28209479177387814;  // 1 / (2 sqrt(pi))
    case KernelKind::Epanechnikov:
      return 0.6;
  }
  throw Error("unknown kernel kind");
}

namespace {

// Weights for the normalized regression ratio. For the gaussian kernel the
// largest weight is factored out before exponentiation, so distant queries
// cannot underflow the whole mass to zero; the common factor cancels in the
// ratio. Compact-support kernels keep their true zeros.
double ratio_weights(const Eigen::Ref<const Eigen::VectorXd>& xs, double x0,
                     const KernelSpec& k, Eigen::VectorXd& weights) {
  const Eigen::Index n = xs.size();
  weights.resize(n);
  double mass = 0.0;
  if (k.kind == KernelKind::Gaussian) {
    double min_usq = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = (x0 - xs[i]) / k.bandwidth;
      weights[i] = u * u;
      min_usq = std::min(min_usq, weights[i]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      weights[i] = std::exp(-0.5 * (weights[i] - min_usq));
      mass += weights[i];
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      weights[i] = kernel_eval(k, (x0 - xs[i]) / k.bandwidth);
      mass += weights[i];
    }
  }
  return mass;
}

}  // namespace

double nw_regress(const Eigen::Ref<const Eigen::VectorXd>& xs,
                  const Eigen::Ref<const Eigen::VectorXd>& ys, double x0,
                  const KernelSpec& k) {
  check_spec(k);
  if (xs.size() != ys.size() || xs.size() == 0) {
    throw Error("nw_regress needs matching non-empty xs and ys");
  }
  Eigen::VectorXd weights;
  const double mass = ratio_weights(xs, x0, k, weights);
  if (mass <= 0.0) {
    throw Error("zero kernel mass at the query point");
  }
  return weights.dot(ys) / mass;
}

double kde(const Eigen::Ref<const Eigen::VectorXd>& xs, double x0,
           const KernelSpec& k) {
  check_spec(k);
  if (xs.size() == 0) throw Error("kde needs at least one point");
  double mass = 0.0;
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    mass += kernel_eval(k, (x0 - xs[i]) / k.bandwidth);
  }
  return mass / (static_cast<double>(xs.size()) * k.bandwidth);
}

double select_bandwidth_cv(const Eigen::Ref<const Eigen::VectorXd>& xs,
                           const Eigen::Ref<const Eigen::VectorXd>& ys,
                           KernelKind kind, const std::vector<double>& grid) {
  const Eigen::Index n = xs.size();
  if (n < 3) throw Error("select_bandwidth_cv needs at least three points");
  if (xs.size() != ys.size()) throw Error("xs and ys have different lengths");
  if (grid.empty()) throw Error("bandwidth grid is empty");
  for (double h : grid) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw Error("bandwidth grid values must be finite and positive");
    }
  }

  // LOO squared error per grid value; NaN marks a bandwidth whose folds lose
  // all kernel mass. Gaussian folds share the max-normalized weights of
  // nw_regress, so only compact-support kernels can drop a fold.
  std::vector<double> errors(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    const double h = grid[g];
    const bool gaussian = kind == KernelKind::Gaussian;
    const KernelSpec spec{kind, h, 2};
    double total = 0.0;
    std::vector<double> usq(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      double mass = 0.0, weighted = 0.0;
      if (gaussian) {
        double min_usq = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == i) continue;
          const double u = (xs[i] - xs[j]) / h;
          usq[static_cast<std::size_t>(j)] = u * u;
          min_usq = std::min(min_usq, u * u);
        }
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == i) continue;
          const double w =
              std::exp(-0.5 * (usq[static_cast<std::size_t>(j)] - min_usq));
          mass += w;
          weighted += w * ys[j];
        }
      } else {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == i) continue;
          const double w = kernel_eval(spec, (xs[i] - xs[j]) / h);
          mass += w;
          weighted += w * ys[j];
        }
      }
      if (mass <= 0.0) {
        total = std::numeric_limits<double>::quiet_NaN();
        break;
      }
      const double r = ys[i] - weighted / mass;
      total += r * r;
    }
    errors[g] = total / static_cast<double>(n);
  });

  // Scan in bandwidth order so ties resolve to the smaller value. Error
  // differences below the rounding noise of the squared outcomes count as
  // ties.
  const double tie_eps =
      1e-12 * (1.0 + ys.squaredNorm() / static_cast<double>(n));
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
  double best_h = 0.0;
  double best_err = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t g : order) {
    if (std::isnan(errors[g])) continue;
    if (!found || errors[g] < best_err - tie_eps) {
      found = true;
      best_err = errors[g];
      best_h = grid[g];
    }
  }
  if (!found) {
    throw Error("every grid bandwidth produced a zero-mass leave-one-out fold");
  }
  return best_h;
}

std::vector<double> default_bandwidth_grid(
    const Eigen::Ref<const Eigen::VectorXd>& xs) {
  const double n = static_cast<double>(xs.size());
  double sd = 1.0;
  if (n > 1) {
    const double mean = xs.mean();
    sd = std::sqrt((xs.array() - mean).square().sum() / (n - 1.0));
  }
  if (!(sd > 0.0)) sd = 1.0;
  constexpr int kPoints = 30;
  const double lo = std::log(0.02 * sd);
  const double hi = std::log(5.0 * sd);
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::exp(lo + (hi - lo) * i / (kPoints - 1.0));
  }
  return grid;
}

}  // namespace diffbound
