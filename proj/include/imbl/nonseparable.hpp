// Non-separable regime: proximal operator / Moreau envelope of the
// logistic loss and the four-equation asymptotic system for regularized-
// path logistic regression, yielding (rho*, R*, beta0*, lambda*) and the
// limiting logit laws (Gaussian on test data, prox-shrunk Gaussian on
// train data).
#pragma once

#include "imbl/separable.hpp"

#include <array>

namespace imbl {

struct NonSepSolution {
  double rho_star = 0.0;
  double R_star = 0.0;
  double beta0_star = 0.0;
  double lambda_star = 0.0;
  std::array<double, 4> residuals{0.0, 0.0, 0.0, 0.0};
};

// Raised when the damped-Newton solve fails after the restart schedule;
// carries the best residual norm reached.
struct ConvergenceError : std::runtime_error {
  double best_residual;
  ConvergenceError(const std::string& what, double best)
      : std::runtime_error(what), best_residual(best) {}
};

// Unique root t of t + lam * l'(t) = x for the logistic loss; Newton from
// t0 = x with a bisection safeguard, |t + lam*l'(t) - x| <= 1e-12.
// Always >= x since l' < 0. lam <= 0 is a domain error.
double prox_logistic(double x, double lam);

// Moreau envelope l(prox) + (prox - x)^2 / (2 lam); <= l(x), nonincreasing
// in lam.
double moreau_logistic(double x, double lam);

// Solves the four-equation system in (rho, R, beta0, lambda) by damped
// Newton with finite-difference Jacobian, initialized from a coarse grid
// over (rho, R, beta0) with lambda matched by 1-D bisection on the
// curvature equation. Requires delta > delta*(0) (else RegimeError).
NonSepSolution solve_nonseparable(const ModelParams& params, int quad_order = 200);

// One class-conditional limiting law on the *margin* scale y*f(x).
// TLD margin: N(loc, R^2). ELD margin: pushforward of the TLD margin
// through u -> s * prox_{(lambda/s) l}(u / s), the per-class shrinkage
// map (increasing, so quantiles push forward directly).
struct NonSepClassLaw {
  int class_label = +1;
  double loc = 0.0;     // TLD margin mean: rho* |mu| R* + y beta0*
  double scale = 1.0;   // R*
  double s = 1.0;       // class margin scale s(y): tau for +1, 1 for -1
  double lambda = 0.0;  // lambda*

  double tld_margin_quantile(double u) const;
  double eld_margin_quantile(double u) const;
  // Logit-scale quantiles (logit = y * margin); for class -1 this is the
  // reflected, order-reversed margin quantile.
  double tld_logit_quantile(double u) const;
  double eld_logit_quantile(double u) const;
};

struct NonSepLimitLaws {
  NonSepClassLaw plus, minus;
};

NonSepLimitLaws limit_laws_nonsep(const NonSepSolution& sol, const ModelParams& params);

}  // namespace imbl
