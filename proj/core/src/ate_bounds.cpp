#include "diffbound/ate_bounds.hpp"

#include <cmath>

namespace diffbound {

namespace {

struct CellMeans {
  double mean10 = 0.0, mean01 = 0.0;
  std::vector<Eigen::Index> rows10, rows01;
};

CellMeans differential_cells(const Dataset& d) {
  CellMeans cells;
  cells.rows10 = cell_rows(d, 1, 0);
  cells.rows01 = cell_rows(d, 0, 1);
  if (cells.rows10.empty() || cells.rows01.empty()) {
    throw Error("empty differential cell: n10=" +
                std::to_string(cells.rows10.size()) +
                ", n01=" + std::to_string(cells.rows01.size()));
  }
  for (auto i : cells.rows10) cells.mean10 += d.y()[i];
  for (auto i : cells.rows01) cells.mean01 += d.y()[i];
  cells.mean10 /= static_cast<double>(cells.rows10.size());
  cells.mean01 /= static_cast<double>(cells.rows01.size());
  return cells;
}

}  // namespace

double dim_estimate(const Dataset& d) {
  const CellMeans cells = differential_cells(d);
  return cells.mean10 - cells.mean01;
}

Eigen::VectorXd ipw_summands(const Dataset& d, const PropensityModel& m) {
  const Eigen::VectorXd p = m.fitted(d);
  Eigen::VectorXd s(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double z = d.z1()[static_cast<std::size_t>(i)];
    const double y = d.y()[i];
    s[i] = z * y / p[i] - (1.0 - z) * y / (1.0 - p[i]);
  }
  return s;
}

double ipw_estimate(const Dataset& d, const PropensityModel& m) {
  return ipw_summands(d, m).mean();
}

Eigen::VectorXd aipw_summands(const Dataset& d, const PropensityModel& m,
                              const OutcomeModel& o) {
  const Eigen::VectorXd p = m.fitted(d);
  Eigen::VectorXd s(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double z = d.z1()[k];
    const double y = d.y()[i];
    const int z2 = d.z2()[k];
    const double m1 = o.predict(1, z2, d.x().row(i).transpose());
    const double m0 = o.predict(0, z2, d.x().row(i).transpose());
    s[i] = z * y / p[i] - (1.0 - z) * y / (1.0 - p[i]) -
           (z - p[i]) / (p[i] * (1.0 - p[i])) *
               ((1.0 - p[i]) * m1 + p[i] * m0);
  }
  return s;
}

double aipw_estimate(const Dataset& d, const PropensityModel& m,
                     const OutcomeModel& o) {
  return aipw_summands(d, m, o).mean();
}

double variance_dim(const Dataset& d) {
  const CellMeans cells = differential_cells(d);
  if (cells.rows10.size() < 2 || cells.rows01.size() < 2) {
    throw Error("variance_dim needs at least two rows per differential cell");
  }
  double ss10 = 0.0, ss01 = 0.0;
  for (auto i : cells.rows10) {
    const double r = d.y()[i] - cells.mean10;
    ss10 += r * r;
  }
  for (auto i : cells.rows01) {
    const double r = d.y()[i] - cells.mean01;
    ss01 += r * r;
  }
  const double n10 = static_cast<double>(cells.rows10.size());
  const double n01 = static_cast<double>(cells.rows01.size());
  return ss10 / (n10 * n10) + ss01 / (n01 * n01);
}

namespace {

double summand_variance(const Eigen::VectorXd& s) {
  const double n = static_cast<double>(s.size());
  return (s.array() - s.mean()).square().sum() / (n * n);
}

}  // namespace

double variance_ipw(const Dataset& d, const PropensityModel& m) {
  return summand_variance(ipw_summands(d, m));
}

double variance_aipw(const Dataset& d, const PropensityModel& m,
                     const OutcomeModel& o) {
  return summand_variance(aipw_summands(d, m, o));
}

BoundsEstimate ate_bounds(const Dataset& d, const PropensityModel& m,
                          Direction direction, Estimator2 estimator2,
                          const OutcomeModel* outcome) {
  BoundsEstimate est;
  est.direction = direction;
  est.estimator2 = estimator2;
  est.mu1_hat = dim_estimate(d);
  if (estimator2 == Estimator2::Aipw) {
    if (outcome == nullptr) {
      throw Error("ate_bounds with the augmented estimator needs an outcome model");
    }
    est.mu2_hat = aipw_estimate(d, m, *outcome);
    est.sigma2_hat = std::sqrt(variance_aipw(d, m, *outcome));
  } else {
    est.mu2_hat = ipw_estimate(d, m);
    est.sigma2_hat = std::sqrt(variance_ipw(d, m));
  }
  est.sigma1_hat = std::sqrt(variance_dim(d));

  double lower = 0.0, upper = 0.0;
  switch (direction) {
    case Direction::Mu1Upper:
      upper = est.mu1_hat;
      lower = est.mu2_hat;
      break;
    case Direction::Mu2Upper:
      upper = est.mu2_hat;
      lower = est.mu1_hat;
      break;
    case Direction::Point:
      lower = std::min(est.mu1_hat, est.mu2_hat);
      upper = std::max(est.mu1_hat, est.mu2_hat);
      break;
  }
  if (lower > upper) {
    est.crossed = true;
    std::swap(lower, upper);
  }
  est.tau_minus = lower;
  est.tau_plus = upper;
  return est;
}

}  // namespace diffbound
