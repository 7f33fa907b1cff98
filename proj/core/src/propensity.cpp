#include "diffbound/propensity.hpp"

#include <algorithm>
#include <cmath>

namespace diffbound {

namespace {

double clip_probability(double p) {
  return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
}

double inv_logit(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Design [1, Z2, X].
Eigen::MatrixXd propensity_design(const Dataset& d) {
  const Eigen::Index n = d.n();
  Eigen::MatrixXd design(n, d.n_covariates() + 2);
  design.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 1) = d.z2()[static_cast<std::size_t>(i)];
  }
  design.rightCols(d.n_covariates()) = d.x();
  return design;
}

double bernoulli_log_likelihood(const Eigen::VectorXd& z,
                                const Eigen::VectorXd& eta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double mu = clip_probability(inv_logit(eta[i]));
    ll += z[i] * std::log(mu) + (1.0 - z[i]) * std::log(1.0 - mu);
  }
  return ll;
}

// Sample SDs of the non-intercept design columns, for the separation check.
Eigen::VectorXd column_sds(const Eigen::MatrixXd& design) {
  const double n = static_cast<double>(design.rows());
  Eigen::VectorXd sds(design.cols());
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    const double mean = design.col(j).mean();
    const double ss = (design.col(j).array() - mean).square().sum();
    sds[j] = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return sds;
}

}  // namespace

double PropensityModel::predict(int z2,
                                const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() + 2 != coefficients.size()) {
    throw Error("covariate vector has wrong length for this propensity model");
  }
  const double eta = coefficients[0] + coefficients[1] * z2 +
                     coefficients.tail(x.size()).dot(x);
  return clip_probability(inv_logit(eta));
}

Eigen::VectorXd PropensityModel::fitted(const Dataset& d) const {
  if (d.n_covariates() + 2 != coefficients.size()) {
    throw Error("dataset has wrong covariate count for this propensity model");
  }
  Eigen::VectorXd eta = propensity_design(d) * coefficients;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    eta[i] = clip_probability(inv_logit(eta[i]));
  }
  return eta;
}

PropensityModel fit_logistic(const Dataset& d, const LogisticOptions& options) {
  const Eigen::MatrixXd design = propensity_design(d);
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();

  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = d.z1()[static_cast<std::size_t>(i)];
  }
  if (z.minCoeff() == z.maxCoeff()) {
    throw Error("z1 is constant; cannot fit the propensity model");
  }

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p) throw Error("singular design matrix in fit_logistic");
  }

  const Eigen::VectorXd sds = column_sds(design);
  PropensityModel model;
  model.coefficients = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = bernoulli_log_likelihood(z, eta);

  // A few extra Newton steps after the nominal tolerance push the iterate to
  // the floating-point noise floor, so row order cannot leave a visible
  // imprint on the reported coefficients.
  int polish_left = 4;
  for (int iter = 1; iter <= options.max_iterations + polish_left; ++iter) {
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = inv_logit(eta[i]);
      w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
    }
    Eigen::MatrixXd hessian = design.transpose() * w.asDiagonal() * design;
    if (options.ridge > 0.0) {
      hessian.diagonal().array() += options.ridge;
    }
    const Eigen::VectorXd gradient = design.transpose() * (z - mu);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success) {
      throw Error("singular design matrix in fit_logistic");
    }
    Eigen::VectorXd step = ldlt.solve(gradient);
    if (!step.allFinite()) {
      throw Error("singular design matrix in fit_logistic");
    }

    // Step halving keeps the log-likelihood non-decreasing. Inside the
    // quadratic basin the improvement per step falls below the rounding
    // error of the log-likelihood itself, so small steps are taken in full.
    double scale = 1.0;
    Eigen::VectorXd candidate, candidate_eta;
    double candidate_ll = 0.0;
    const bool in_basin = step.cwiseAbs().maxCoeff() < 1e-4;
    for (int h = 0; h < 40; ++h) {
      candidate = model.coefficients + scale * step;
      candidate_eta = design * candidate;
      candidate_ll = bernoulli_log_likelihood(z, candidate_eta);
      if (in_basin || candidate_ll >= ll) break;
      scale *= 0.5;
    }
    const double max_update = (scale * step).cwiseAbs().maxCoeff();
    model.coefficients = candidate;
    eta = candidate_eta;
    ll = candidate_ll;
    if (!model.converged) model.iterations = iter;

    for (Eigen::Index j = 1; j < p; ++j) {
      if (std::abs(model.coefficients[j]) * sds[j] > 30.0) {
        throw Error(
            "possible separation in fit_logistic: standardized coefficient "
            "exceeds 30; review covariates or use a ridge penalty");
      }
    }
    if (max_update < options.tol && !model.converged) model.converged = true;
    if (model.converged) {
      if (max_update < 1e-14 || --polish_left < 0) break;
    } else if (iter >= options.max_iterations) {
      break;
    }
  }
  model.log_likelihood = ll;
  if (!model.coefficients.allFinite()) {
    throw Error("fit_logistic produced non-finite coefficients");
  }
  return model;
}

ValidationReport check_positivity(const PropensityModel& m, const Dataset& d,
                                  double lo, double hi) {
  ValidationReport report;
  const Eigen::VectorXd p = m.fitted(d);
  std::vector<Eigen::Index> outside;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < lo || p[i] > hi) outside.push_back(i);
  }
  if (!outside.empty()) {
    std::string text =
        std::to_string(outside.size()) + " of " + std::to_string(p.size()) +
        " fitted probabilities (" +
        std::to_string(100.0 * static_cast<double>(outside.size()) /
                       static_cast<double>(p.size())) +
        "%) lie outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
        "]; rows:";
    const std::size_t shown = std::min<std::size_t>(outside.size(), 10);
    for (std::size_t k = 0; k < shown; ++k) {
      text += " " + std::to_string(outside[k]);
    }
    if (outside.size() > shown) text += " ...";
    report.add(Severity::Warning, text);
  }
  return report;
}

double OutcomeModel::predict(int z1, int z2,
                             const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() + 3 != coefficients.size()) {
    throw Error("covariate vector has wrong length for this outcome model");
  }
  return coefficients[0] + coefficients[1] * z1 + coefficients[2] * z2 +
         coefficients.tail(x.size()).dot(x);
}

OutcomeModel fit_outcome_regression(const Dataset& d) {
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.n_covariates() + 3;
  if (n <= p) {
    throw Error("insufficient data for the outcome regression: need n > " +
                std::to_string(p));
  }
  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 1) = d.z1()[static_cast<std::size_t>(i)];
    design(i, 2) = d.z2()[static_cast<std::size_t>(i)];
  }
  design.rightCols(d.n_covariates()) = d.x();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p) {
    throw Error("rank-deficient design in fit_outcome_regression");
  }
  OutcomeModel model;
  model.coefficients = qr.solve(d.y());
  return model;
}

}  // namespace diffbound
