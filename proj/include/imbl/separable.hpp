// Asymptotic theory of the margin-rebalanced hard-margin SVM on the
// two-component Gaussian mixture, in the separable regime: the scalar
// system for (rho*, beta0*, kappa*), the separability threshold, the
// optimal rebalancing ratio, limiting test errors and limiting
// logit laws (Gaussian on test data, rectified Gaussian on train data).
#pragma once

#include <array>
#include <optional>
#include <stdexcept>

namespace imbl {

// Population-level problem description. pi is the positive-class
// probability, mu_norm the mean separation |mu|, delta the limiting
// sample-to-dimension ratio n/d, tau the margin rebalancing ratio
// (positive-class samples must clear tau times the negative margin).
struct ModelParams {
  double pi = 0.5;
  double mu_norm = 1.0;
  double delta = 1.0;
  double tau = 1.0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Solution of the three-equation separable system. residuals stores the
// absolute equation residuals at the returned point (order: rho equation,
// first-order condition in beta0, first-order condition in kappa).
struct SeparableSolution {
  double rho_star = 0.0;
  double beta0_star = 0.0;
  double kappa_star = 0.0;
  double delta_star_0 = 0.0;  // separability threshold at these params
  std::array<double, 3> residuals{0.0, 0.0, 0.0};
};

// Raised when a solver is called outside its regime (e.g. the separable
// solver with delta >= the separability threshold).
struct RegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LogitLawKind { rectified_eld, gaussian_tld };

// One class-conditional limiting law of the *logit* f(x) (not the margin).
// gaussian_tld: N(location, 1). rectified_eld: the Gaussian clipped at
// `truncation` on the margin side — from below for class +1, from above
// for class -1 — with an atom at the clip point.
struct LimitLogitLaw {
  LogitLawKind kind = LogitLawKind::gaussian_tld;
  int class_label = +1;
  double location = 0.0;
  double scale = 1.0;
  std::optional<double> truncation;

  double quantile(double u) const;  // u in (0,1)
  // Mass of the atom at the truncation point (0 for Gaussian laws).
  double atom_mass() const;
  // The same law expressed on the margin scale y*f(x): identity for
  // class +1, reflection for class -1. Rectified laws become clipped
  // from below with the atom at the low end in either case.
  LimitLogitLaw as_margin_law() const;
};

struct LimitLaws {
  LimitLogitLaw eld_plus, eld_minus;  // training logits
  LimitLogitLaw tld_plus, tld_minus;  // test logits
};

struct TauOptResult {
  double tau = 1.0;
  // Set when the explicit formula's denominator is <= 0 (extreme
  // imbalance); the value is reported as-is, never clamped.
  bool degenerate_denominator = false;
};

struct ErrorTriple {
  double err_plus = 0.0;
  double err_minus = 0.0;
  double err_balanced = 0.0;
};

// H_kappa(rho, beta0) = (1 - rho^2) / E[(s(Y)kappa - rho|mu| + G - beta0 Y)_+^2],
// evaluated with the closed-form second rectified moment per class.
double h_kappa(double rho, double beta0, double kappa, const ModelParams& params);

// delta*(kappa) = max over (rho, beta0) of H_kappa. Golden-section over rho
// with an inner Newton solve for the optimal beta0 at each rho.
double delta_star(double kappa, const ModelParams& params);

// Solves the separable system: bisection for rho* on the scalar margin
// equation, then closed forms for beta0* and kappa*. Requires
// delta < delta*(0) (else RegimeError) and mu_norm > 0.
SeparableSolution solve_separable(const ModelParams& params);

// Optimal rebalancing ratio via the explicit g1_inv expression; the tau
// field of params is ignored. Separable regime required.
TauOptResult tau_opt(const ModelParams& params);

// Limiting per-class and balanced test errors.
ErrorTriple asymptotic_errors(const SeparableSolution& sol, const ModelParams& params);

// Limiting per-class training (rectified Gaussian) and test (Gaussian)
// logit laws.
LimitLaws limit_laws(const SeparableSolution& sol, const ModelParams& params);

}  // namespace imbl
