#include "diffbound/irt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "diffbound/dataset.hpp"

namespace diffbound {

namespace {

double inv_logit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

void check_binary_arg(int v, const char* name) {
  if (v != 0 && v != 1) {
    throw Error(std::string(name) + " must be 0 or 1");
  }
}

}  // namespace

double item_prob(double alpha, double beta, double u) {
  return inv_logit(alpha * (u - beta));
}

double joint_prob(double alpha1, double beta1, double alpha2, double beta2,
                  int a, int b, double u) {
  check_binary_arg(a, "a");
  check_binary_arg(b, "b");
  const double p1 = item_prob(alpha1, beta1, u);
  const double p2 = item_prob(alpha2, beta2, u);
  return (a == 1 ? p1 : 1.0 - p1) * (b == 1 ? p2 : 1.0 - p2);
}

QuadratureGrid gauss_hermite_normal(int n) {
  if (n < 1) throw Error("quadrature needs at least one node");
  // Golub-Welsch on the Hermite Jacobi matrix, then rescale to N(0,1):
  // nodes sqrt(2) t_i, weights are the squared first eigenvector components
  // (they sum to one exactly).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) {
    throw Error("quadrature eigendecomposition failed");
  }
  QuadratureGrid grid;
  grid.nodes.resize(static_cast<std::size_t>(n));
  grid.weights.resize(static_cast<std::size_t>(n));
  const double sqrt2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    grid.nodes[static_cast<std::size_t>(i)] = sqrt2 * solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    grid.weights[static_cast<std::size_t>(i)] = v0 * v0;
  }
  return grid;
}

namespace {

struct PatternTable {
  std::vector<std::vector<int>> patterns;
  std::vector<double> counts;
  int n_items = 0;
};

PatternTable collapse_patterns(const Eigen::MatrixXi& items) {
  const Eigen::Index n = items.rows();
  const Eigen::Index J = items.cols();
  if (J < 2) throw Error("fit_2pl needs at least two items");
  if (n < 2) throw Error("fit_2pl needs at least two rows");
  for (Eigen::Index j = 0; j < J; ++j) {
    int lo = 1, hi = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int v = items(i, j);
      if (v != 0 && v != 1) throw Error("item matrix must contain only 0 and 1");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) {
      throw Error("item " + std::to_string(j) + " is constant across units");
    }
  }
  std::map<std::vector<int>, double> counter;
  std::vector<int> key(static_cast<std::size_t>(J));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < J; ++j) {
      key[static_cast<std::size_t>(j)] = items(i, j);
    }
    counter[key] += 1.0;
  }
  PatternTable table;
  table.n_items = static_cast<int>(J);
  for (auto& [pattern, count] : counter) {
    table.patterns.push_back(pattern);
    table.counts.push_back(count);
  }
  return table;
}

// Marginal log-likelihood and score over (alpha_1..alpha_J, beta_1..beta_J).
class Marginal2pl {
 public:
  Marginal2pl(PatternTable table, QuadratureGrid grid)
      : table_(std::move(table)), grid_(std::move(grid)) {}

  int n_items() const { return table_.n_items; }

  double log_likelihood(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd dummy;
    return evaluate(theta, nullptr);
  }

  double log_likelihood_and_grad(const Eigen::VectorXd& theta,
                                 Eigen::VectorXd& grad) const {
    return evaluate(theta, &grad);
  }

 private:
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const int J = table_.n_items;
    const auto Q = grid_.nodes.size();
    const auto T = table_.patterns.size();
    if (grad) *grad = Eigen::VectorXd::Zero(2 * J);

    // log p and log(1-p) per item and node
    Eigen::MatrixXd logp(J, static_cast<Eigen::Index>(Q));
    Eigen::MatrixXd log1p_(J, static_cast<Eigen::Index>(Q));
    Eigen::MatrixXd p(J, static_cast<Eigen::Index>(Q));
    for (int j = 0; j < J; ++j) {
      const double a = theta[j];
      const double b = theta[J + j];
      for (std::size_t q = 0; q < Q; ++q) {
        const double eta = a * (grid_.nodes[q] - b);
        const double pj = inv_logit(eta);
        const double pc = std::clamp(pj, 1e-300, 1.0 - 1e-16);
        p(j, static_cast<Eigen::Index>(q)) = pj;
        logp(j, static_cast<Eigen::Index>(q)) = std::log(pc);
        log1p_(j, static_cast<Eigen::Index>(q)) = std::log1p(-pc);
      }
    }

    double ll = 0.0;
    std::vector<double> logterm(Q);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& y = table_.patterns[t];
      double max_term = -std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < Q; ++q) {
        double s = std::log(grid_.weights[q]);
        for (int j = 0; j < J; ++j) {
          s += y[static_cast<std::size_t>(j)] == 1
                   ? logp(j, static_cast<Eigen::Index>(q))
                   : log1p_(j, static_cast<Eigen::Index>(q));
        }
        logterm[q] = s;
        max_term = std::max(max_term, s);
      }
      double sum = 0.0;
      for (std::size_t q = 0; q < Q; ++q) sum += std::exp(logterm[q] - max_term);
      const double log_lt = max_term + std::log(sum);
      ll += table_.counts[t] * log_lt;
      if (grad) {
        for (std::size_t q = 0; q < Q; ++q) {
          const double post = std::exp(logterm[q] - log_lt);  // posterior weight
          const double w = table_.counts[t] * post;
          for (int j = 0; j < J; ++j) {
            const double resid =
                y[static_cast<std::size_t>(j)] - p(j, static_cast<Eigen::Index>(q));
            (*grad)[j] += w * resid * (grid_.nodes[q] - theta[J + j]);
            (*grad)[J + j] += w * resid * (-theta[j]);
          }
        }
      }
    }
    return ll;
  }

  PatternTable table_;
  QuadratureGrid grid_;
};

// Observed information via central differences of the analytic score.
Eigen::MatrixXd observed_information(const Marginal2pl& model,
                                     const Eigen::VectorXd& theta) {
  const auto dim = theta.size();
  Eigen::MatrixXd info(dim, dim);
  Eigen::VectorXd gp(dim), gm(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[k]));
    Eigen::VectorXd tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    model.log_likelihood_and_grad(tp, gp);
    model.log_likelihood_and_grad(tm, gm);
    info.col(k) = -(gp - gm) / (2.0 * h);
  }
  return 0.5 * (info + info.transpose());
}

}  // namespace

IrtFit fit_2pl(const Eigen::MatrixXi& items, const Irt2plOptions& options) {
  const Marginal2pl model(collapse_patterns(items),
                          gauss_hermite_normal(options.quadrature_points));
  const int J = model.n_items();
  const Eigen::Index dim = 2 * J;

  Eigen::VectorXd theta(dim);
  for (int j = 0; j < J; ++j) {
    double mean = 0.0;
    for (Eigen::Index i = 0; i < items.rows(); ++i) mean += items(i, j);
    mean /= static_cast<double>(items.rows());
    theta[j] = 1.0;
    theta[J + j] = std::clamp(-std::log(mean / (1.0 - mean)), -4.0, 4.0);
  }

  Eigen::VectorXd grad(dim);
  double ll = model.log_likelihood_and_grad(theta, grad);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(dim, dim);
  bool hinv_is_identity = true;

  IrtFit fit;
  fit.converged = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < options.grad_tol) {
      fit.converged = true;
      break;
    }
    Eigen::VectorXd direction = hinv * grad;  // ascent direction
    if (direction.dot(grad) <= 0.0) {
      hinv.setIdentity();
      hinv_is_identity = true;
      direction = grad;
    }
    // Near the optimum the per-step gain falls below the rounding error of
    // the log-likelihood itself, so the Armijo test cannot see it; quasi-
    // Newton steps are taken in full there and the gradient check decides.
    const bool in_basin = grad.cwiseAbs().maxCoeff() < 1e-3;
    double step = 1.0;
    Eigen::VectorXd theta_new;
    Eigen::VectorXd grad_new(dim);
    double ll_new = ll;
    bool improved = false;
    for (int half = 0; half < 50; ++half) {
      theta_new = theta + step * direction;
      ll_new = model.log_likelihood_and_grad(theta_new, grad_new);
      if (std::isfinite(ll_new) &&
          (in_basin || ll_new >= ll + 1e-4 * step * grad.dot(direction))) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      // A stale curvature approximation can poison the search direction;
      // retry once from steepest ascent before giving up.
      if (!hinv_is_identity) {
        hinv.setIdentity();
        hinv_is_identity = true;
        continue;
      }
      break;
    }

    const Eigen::VectorXd s = theta_new - theta;
    const Eigen::VectorXd yk = grad_new - grad;  // note: gradient of ll
    const double sy = -s.dot(yk);                // curvature of -ll
    if (sy > 1e-12) {
      // BFGS update on the inverse Hessian of -ll.
      const Eigen::VectorXd hy = hinv * (-yk);
      const double yhy = (-yk).dot(hy);
      hinv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
              (hy * s.transpose() + s * hy.transpose()) / sy;
      hinv_is_identity = false;
    }
    theta = theta_new;
    grad = grad_new;
    ll = ll_new;
  }

  fit.iterations = iter;
  fit.log_likelihood = ll;
  fit.discriminations = theta.head(J);
  fit.difficulties = theta.tail(J);

  Eigen::MatrixXd info = observed_information(model, theta);
  Eigen::VectorXd variances(dim);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  bool direct = ldlt.info() == Eigen::Success;
  if (direct) {
    const Eigen::MatrixXd cov =
        ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));
    variances = cov.diagonal();
    direct = variances.allFinite() && variances.minCoeff() > 0.0;
  }
  if (!direct) {
    // Near-singular information (e.g. perfectly correlated items): fall back
    // to an eigenvalue-floored pseudo-inverse so the errors stay finite.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-10);
    const Eigen::MatrixXd cov = es.eigenvectors() *
                                ev.cwiseInverse().asDiagonal() *
                                es.eigenvectors().transpose();
    variances = cov.diagonal().cwiseAbs();
  }
  fit.se_discriminations = variances.head(J).cwiseSqrt();
  fit.se_difficulties = variances.tail(J).cwiseSqrt();
  return fit;
}

DirectionSuggestion monotonicity_check(const IrtFit& fit, int treat_item,
                                       int second_item, bool outcome_monotone) {
  const auto J = fit.discriminations.size();
  if (treat_item < 0 || treat_item >= J || second_item < 0 || second_item >= J ||
      treat_item == second_item) {
    throw Error("monotonicity_check got invalid item indices");
  }
  const double a1 = fit.discriminations[treat_item];
  const double a2 = fit.discriminations[second_item];
  DirectionSuggestion out;
  if (!outcome_monotone) {
    out.case_label = "inconclusive";
    out.rationale =
        "outcome monotonicity was not attested; a direction cannot be "
        "suggested from the discriminations alone";
    return out;
  }
  char buf[160];
  if (a2 >= a1 && a1 > 0.0) {
    out.direction = Direction::Mu1Upper;
    out.case_label = "alpha2 >= alpha1 > 0";
    std::snprintf(buf, sizeof(buf),
                  "discriminations %.4f (treatment) <= %.4f (second item), "
                  "both positive: the differential contrast is the upper bound",
                  a1, a2);
    out.rationale = buf;
  } else if (a2 <= a1 && a1 < 0.0) {
    out.direction = Direction::Mu2Upper;
    out.case_label = "alpha2 <= alpha1 < 0";
    std::snprintf(buf, sizeof(buf),
                  "discriminations %.4f (treatment) >= %.4f (second item), "
                  "both negative: the weighting estimator is the upper bound",
                  a1, a2);
    out.rationale = buf;
  } else {
    out.case_label = "inconclusive";
    std::snprintf(buf, sizeof(buf),
                  "discriminations %.4f (treatment) and %.4f (second item) "
                  "fit neither ordered regime; choose the direction on "
                  "substantive grounds",
                  a1, a2);
    out.rationale = buf;
  }
  return out;
}

namespace {

void check_grid(const QuadratureGrid& grid, const char* name) {
  if (grid.nodes.empty() || grid.nodes.size() != grid.weights.size()) {
    throw Error(std::string(name) + " grid is empty or mismatched");
  }
  const double total =
      std::accumulate(grid.weights.begin(), grid.weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-8) {
    throw Error(std::string(name) + " weights must sum to one");
  }
}

double h_ratio(const HOracleSpec& spec, int a, int b,
               const QuadratureGrid& ugrid, const QuadratureGrid& xgrid) {
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t qu = 0; qu < ugrid.nodes.size(); ++qu) {
    const double u = ugrid.nodes[qu];
    const double wu = ugrid.weights[qu];
    const double cell =
        joint_prob(spec.alpha1, spec.beta1, spec.alpha2, spec.beta2, a, b, u);
    denominator += wu * cell;
    double fx = 0.0;
    for (std::size_t qx = 0; qx < xgrid.nodes.size(); ++qx) {
      fx += xgrid.weights[qx] * spec.f_a(xgrid.nodes[qx], u, a);
    }
    numerator += wu * cell * fx;
  }
  if (denominator <= 1e-300) {
    throw Error("zero denominator mass in h_oracle");
  }
  return numerator / denominator;
}

}  // namespace

double h_oracle(const HOracleSpec& spec, int a, int b) {
  check_binary_arg(a, "a");
  check_binary_arg(b, "b");
  if (!spec.f_a) throw Error("h_oracle needs a callable f_a");

  QuadratureGrid xgrid;
  if (spec.density_x) {
    check_grid(*spec.density_x, "density_x");
    xgrid = *spec.density_x;
  } else {
    xgrid.nodes = {0.0};
    xgrid.weights = {1.0};
  }

  if (spec.density_u) {
    check_grid(*spec.density_u, "density_u");
    return h_ratio(spec, a, b, *spec.density_u, xgrid);
  }

  // Standard-normal latent trait: refine the Gauss-Hermite rule until two
  // successive node counts agree to 1e-6 relative error.
  double previous = 0.0;
  bool have_previous = false;
  double value = 0.0;
  for (int q : {41, 81, 161, 321, 641}) {
    value = h_ratio(spec, a, b, gauss_hermite_normal(q), xgrid);
    if (have_previous &&
        std::abs(value - previous) <= 1e-6 * std::abs(value) + 1e-12) {
      return value;
    }
    previous = value;
    have_previous = true;
  }
  return value;
}

}  // namespace diffbound
