#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diffbound/ate_bounds.hpp"

namespace diffbound {

// P(item = 1 | U = u) under a two-parameter logistic item with
// discrimination alpha and difficulty beta.
double item_prob(double alpha, double beta, double u);

// Joint cell probability P(Z1 = a, Z2 = b | U = u) under local independence.
double joint_prob(double alpha1, double beta1, double alpha2, double beta2,
                  int a, int b, double u);

struct IrtFit {
  Eigen::VectorXd discriminations;
  Eigen::VectorXd difficulties;
  Eigen::VectorXd se_discriminations;
  Eigen::VectorXd se_difficulties;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct Irt2plOptions {
  int quadrature_points = 41;
  double grad_tol = 1e-6;  // max-norm of the marginal score
  int max_iterations = 500;
};

// Marginal maximum likelihood for the two-parameter logistic model with a
// standard-normal latent trait, integrated by Gauss-Hermite quadrature and
// optimized by BFGS on all (alpha, beta) jointly. Standard errors come from
// the inverse observed information.
IrtFit fit_2pl(const Eigen::MatrixXi& items, const Irt2plOptions& options = {});

struct DirectionSuggestion {
  std::optional<Direction> direction;  // empty when inconclusive
  std::string case_label;
  std::string rationale;
};

// Suggest a bound direction from the fitted discriminations of the treatment
// item and the second item. The outcome-monotonicity premise cannot be
// checked from data; the caller attests it, and the result is a suggestion
// only, never auto-applied.
DirectionSuggestion monotonicity_check(const IrtFit& fit, int treat_item,
                                       int second_item, bool outcome_monotone);

// Nodes and weights of a probability quadrature rule (weights sum to one).
struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule adapted to N(0,1).
QuadratureGrid gauss_hermite_normal(int n);

// Inputs for the selection-functional integrals
//   h(a,b) = E[f_a(X,U) | Z1 = a, Z2 = b]
// under the two-parameter logistic joint treatment model with U and X
// independent. density_u defaults to an internally refined Gauss-Hermite rule
// for a standard-normal latent trait; density_x is optional (omit it when
// f_a ignores x).
struct HOracleSpec {
  std::function<double(double x, double u, int a)> f_a;
  double alpha1 = 1.0, beta1 = 0.0;
  double alpha2 = 1.0, beta2 = 0.0;
  std::optional<QuadratureGrid> density_u;
  std::optional<QuadratureGrid> density_x;
};

// Tensor-quadrature evaluation of h(a,b). With the default latent rule the
// node count is doubled until successive values agree to 1e-6 relative error.
// Errors on zero denominator mass.
double h_oracle(const HOracleSpec& spec, int a, int b);

}  // namespace diffbound
