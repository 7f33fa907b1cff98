#include "diffbound/moment_inference.hpp"

#include <algorithm>
#include <cmath>

#include "diffbound/parallel.hpp"
#include "diffbound/rng.hpp"

namespace diffbound {

namespace {

// k-th smallest with k = ceil(q * L): the smallest value whose empirical CDF
// reaches q. The acceptance fixtures pin this convention.
double empirical_quantile(std::vector<double> v, double q) {
  const auto L = static_cast<std::int64_t>(v.size());
  auto k = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(L)));
  k = std::clamp<std::int64_t>(k, 1, L);
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
  return v[static_cast<std::size_t>(k - 1)];
}

// Test state with the tau-free pieces precomputed: recentered draws and the
// first-stage bootstrap quantile.
class TwoStepTester {
 public:
  TwoStepTester(const BootstrapDraws& bd, double alpha, double beta)
      : alpha_(alpha), beta_(beta) {
    if (!(beta > 0.0) || !(beta < alpha) || !(alpha < 1.0)) {
      throw Error("two_step_test needs 0 < beta < alpha < 1");
    }
    if (bd.w1.empty() || bd.w1.size() != bd.w2.size()) {
      throw Error("bootstrap draws are empty or mismatched");
    }
    if (!(bd.sigma1_hat > 0.0) || !(bd.sigma2_hat > 0.0) ||
        !std::isfinite(bd.sigma1_hat) || !std::isfinite(bd.sigma2_hat)) {
      throw Error("bootstrap standard errors must be positive and finite");
    }
    if (bd.n < 1) throw Error("bootstrap draws carry an invalid sample size");
    s1_ = bd.sigma1_hat;
    s2_ = bd.sigma2_hat;
    rn_ = std::sqrt(static_cast<double>(bd.n));
    const auto L = bd.w1.size();
    double sum1 = 0.0, sum2 = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      if (!std::isfinite(bd.w1[j]) || !std::isfinite(bd.w2[j])) {
        throw Error("bootstrap draws contain non-finite values");
      }
      sum1 += bd.w1[j];
      sum2 += bd.w2[j];
    }
    w1bar_ = sum1 / static_cast<double>(L);
    w2bar_ = sum2 / static_cast<double>(L);

    // a1j = w1_j - mean(w1) equals the recentered lower moment; the upper
    // moment recenters with the opposite sign because tau enters as tau - w2.
    std::vector<double> b_draws(L);
    low_part_.resize(L);
    up_part_.resize(L);
    for (std::size_t j = 0; j < L; ++j) {
      const double a1 = bd.w1[j] - w1bar_;
      const double a2 = bd.w2[j] - w2bar_;
      b_draws[j] = std::max(rn_ * a1 / s1_, -rn_ * a2 / s2_);
      low_part_[j] = -rn_ * a1 / s1_;  // sqrt(n) (W1bar - W1j) / s1
      up_part_[j] = rn_ * a2 / s2_;    // sqrt(n) (W2bar - W2j) / s2
    }
    b_quantile_ = empirical_quantile(std::move(b_draws), 1.0 - beta_);
  }

  bool accept(double tau) const {
    if (!std::isfinite(tau)) throw Error("two_step_test got a non-finite tau");
    const double moment1 = w1bar_ - tau;  // mean of W1j(tau)
    const double moment2 = tau - w2bar_;  // mean of W2j(tau)
    const double ub1 = moment1 + s1_ * b_quantile_ / rn_;
    const double ub2 = moment2 + s2_ * b_quantile_ / rn_;
    // First stage: when the moment confidence bound already sits in the
    // non-positive orthant, tau is accepted without a second-stage test.
    if (ub1 <= 0.0 && ub2 <= 0.0) return true;

    const double lambda1 = std::min(ub1, 0.0);
    const double lambda2 = std::min(ub2, 0.0);
    std::vector<double> j_draws(low_part_.size());
    for (std::size_t j = 0; j < low_part_.size(); ++j) {
      j_draws[j] = std::max(low_part_[j] + rn_ * lambda1 / s1_,
                            up_part_[j] + rn_ * lambda2 / s2_);
    }
    const double critical =
        empirical_quantile(std::move(j_draws), 1.0 - alpha_ + beta_);
    const double t_stat = std::max(rn_ * moment1 / s1_, rn_ * moment2 / s2_);
    return t_stat <= critical;
  }

  double lower_mean() const { return w1bar_; }
  double upper_mean() const { return w2bar_; }
  double sigma_max() const { return std::max(s1_, s2_); }

 private:
  double alpha_, beta_;
  double s1_ = 0.0, s2_ = 0.0, rn_ = 0.0;
  double w1bar_ = 0.0, w2bar_ = 0.0;
  double b_quantile_ = 0.0;
  std::vector<double> low_part_, up_part_;
};

BootstrapDraws role_ordered(const BootstrapDraws& bd, Direction direction) {
  bool swap_roles = false;
  switch (direction) {
    case Direction::Mu2Upper:
      swap_roles = false;
      break;
    case Direction::Mu1Upper:
      swap_roles = true;
      break;
    case Direction::Point: {
      // Either orientation is valid at the point-identified truth; take the
      // one the sample suggests.
      double m1 = 0.0, m2 = 0.0;
      for (double v : bd.w1) m1 += v;
      for (double v : bd.w2) m2 += v;
      swap_roles = m1 > m2;
      break;
    }
  }
  if (!swap_roles) return bd;
  BootstrapDraws out = bd;
  std::swap(out.w1, out.w2);
  std::swap(out.sigma1_hat, out.sigma2_hat);
  return out;
}

}  // namespace

bool two_step_test(const BootstrapDraws& bd, double tau, double alpha,
                   double beta) {
  return TwoStepTester(bd, alpha, beta).accept(tau);
}

ConfidenceRegion confidence_region(const BootstrapDraws& bd, double alpha,
                                   double beta, Direction direction) {
  const BootstrapDraws ordered = role_ordered(bd, direction);
  const TwoStepTester tester(ordered, alpha, beta);

  const double center_lo = std::min(tester.lower_mean(), tester.upper_mean());
  const double center_hi = std::max(tester.lower_mean(), tester.upper_mean());
  const double pad = 8.0 * tester.sigma_max();
  const double lo = center_lo - pad;
  const double hi = center_hi + pad;
  const double span = hi - lo;
  const int grid_points = kRegionGridPoints;

  std::vector<char> accepted(static_cast<std::size_t>(grid_points), 0);
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int g = 0; g < grid_points; ++g) {
    grid[static_cast<std::size_t>(g)] =
        lo + span * g / static_cast<double>(grid_points - 1);
  }
  parallel_for(grid.size(), [&](std::size_t g) {
    accepted[g] = tester.accept(grid[g]) ? 1 : 0;
  });

  int first = -1, last = -1;
  bool contiguous = true;
  for (int g = 0; g < grid_points; ++g) {
    if (accepted[static_cast<std::size_t>(g)]) {
      if (first < 0) first = g;
      if (last >= 0 && g > last + 1) contiguous = false;
      last = g;
    }
  }
  if (first < 0) {
    throw Error(
        "no tau accepted by the two-step test; the maintained direction may "
        "be violated or the draws are degenerate");
  }

  const double tol = 1e-4 * span;
  auto refine = [&](double inside, double outside) {
    // inside accepted, outside rejected; returns the boundary.
    while (std::abs(inside - outside) > tol) {
      const double mid = 0.5 * (inside + outside);
      if (tester.accept(mid)) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return inside;
  };

  ConfidenceRegion region;
  region.alpha = alpha;
  region.beta = beta;
  region.n_boot = static_cast<int>(ordered.w1.size());
  region.grid_points = grid_points;
  region.contiguous = contiguous;
  region.lower = first > 0
                     ? refine(grid[static_cast<std::size_t>(first)],
                              grid[static_cast<std::size_t>(first - 1)])
                     : grid.front();
  region.upper = last < grid_points - 1
                     ? refine(grid[static_cast<std::size_t>(last)],
                              grid[static_cast<std::size_t>(last + 1)])
                     : grid.back();
  return region;
}

BootstrapDraws bootstrap_estimates(const Dataset& d,
                                   const BootstrapConfig& config, int n_boot,
                                   std::uint64_t seed) {
  if (n_boot < 100) throw Error("bootstrap needs at least 100 replicates");
  const Eigen::Index n = d.n();

  BootstrapDraws draws;
  draws.n = n;
  draws.seed = seed;
  draws.w1.resize(static_cast<std::size_t>(n_boot));
  draws.w2.resize(static_cast<std::size_t>(n_boot));

  // Full-sample sandwich standard errors, held fixed across replicates.
  {
    const PropensityModel m = fit_logistic(d, config.logistic);
    if (config.cate) {
      const auto& q = *config.cate;
      const auto [v1, v2] =
          cate_variances(d, m, q.x0, q.kernels, q.cov_index, false);
      draws.sigma1_hat = std::sqrt(v1);
      draws.sigma2_hat = std::sqrt(v2);
    } else {
      draws.sigma1_hat = std::sqrt(variance_dim(d));
      if (config.estimator2 == Estimator2::Aipw) {
        const OutcomeModel o = fit_outcome_regression(d);
        draws.sigma2_hat = std::sqrt(variance_aipw(d, m, o));
      } else {
        draws.sigma2_hat = std::sqrt(variance_ipw(d, m));
      }
    }
  }

  parallel_for(static_cast<std::size_t>(n_boot), [&](std::size_t j) {
    for (int attempt = 0; attempt <= 10; ++attempt) {
      Rng rng(stream_seed(seed, {static_cast<std::uint64_t>(j),
                                 static_cast<std::uint64_t>(attempt)}));
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
      for (auto& r : rows) r = rng.index(n);
      const Dataset res = d.resample(rows);
      const CellCounts counts = cell_counts(res);
      if (counts.n10 == 0 || counts.n01 == 0) continue;
      try {
        const PropensityModel m = fit_logistic(res, config.logistic);
        if (config.cate) {
          const auto& q = *config.cate;
          draws.w1[j] = mu1_at(res, q.x0, q.kernels.k1, q.kernels.k2, q.cov_index);
          draws.w2[j] = mu2_at(res, m, q.x0, q.kernels.k3, q.cov_index);
        } else {
          draws.w1[j] = dim_estimate(res);
          if (config.estimator2 == Estimator2::Aipw) {
            const OutcomeModel o = fit_outcome_regression(res);
            draws.w2[j] = aipw_estimate(res, m, o);
          } else {
            draws.w2[j] = ipw_estimate(res, m);
          }
        }
        return;
      } catch (const Error&) {
        // refit or kernel failure on this resample; redraw
      }
    }
    throw Error(
        "bootstrap replicate kept producing empty or degenerate resamples "
        "after 10 retries; increase n or collapse cells");
  });
  return draws;
}

}  // namespace diffbound
