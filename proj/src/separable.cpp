#include "imbl/separable.hpp"

#include "imbl/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace imbl {

void ModelParams::validate() const {
  if (!(pi > 0.0 && pi <= 0.5)) throw std::invalid_argument("pi must be in (0, 0.5]");
  if (!(mu_norm >= 0.0) || !std::isfinite(mu_norm))
    throw std::invalid_argument("mu_norm must be a nonnegative real");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
}

double h_kappa(double rho, double beta0, double kappa, const ModelParams& params) {
  // E[(s(Y)kappa - rho|mu| + G - beta0 Y)_+^2] reduces per class to the
  // closed-form second rectified moment: the class-y shift is
  // s(y)kappa - rho|mu| - beta0 y (G is symmetric).
  const double m = params.mu_norm;
  double denom = params.pi * g2(params.tau * kappa - rho * m - beta0) +
                 (1.0 - params.pi) * g2(kappa - rho * m + beta0);
  return (1.0 - rho * rho) / denom;
}

namespace {

// Root of the margin-balance condition in beta0 at fixed (rho, kappa):
//   pi * g1(tau*kappa - rho|mu| - beta0) = (1-pi) * g1(kappa - rho|mu| + beta0).
// The left side is strictly decreasing and the right strictly increasing
// in beta0, so the root is unique. Newton (g1' = Phi) with a bisection
// safeguard on an expanding bracket.
double balance_beta0(double rho, double kappa, const ModelParams& p) {
  const double m = p.mu_norm;
  auto fval = [&](double b) {
    return p.pi * g1(p.tau * kappa - rho * m - b) - (1.0 - p.pi) * g1(kappa - rho * m + b);
  };
  auto fder = [&](double b) {
    return -p.pi * std_normal_cdf(p.tau * kappa - rho * m - b) -
           (1.0 - p.pi) * std_normal_cdf(kappa - rho * m + b);
  };
  double lo = -1.0, hi = 1.0;
  for (int k = 0; k < 80 && fval(lo) < 0.0; ++k) lo = 2.0 * lo - 1.0;
  for (int k = 0; k < 80 && fval(hi) > 0.0; ++k) hi = 2.0 * hi + 1.0;
  double b = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double f = fval(b);
    if (f > 0.0)
      lo = b;
    else
      hi = b;
    double d = fder(b);
    double step = (d != 0.0) ? f / d : 0.0;
    double bn = b - step;
    if (!(bn > lo && bn < hi)) bn = 0.5 * (lo + hi);
    if (std::abs(bn - b) <= 1e-14 * (1.0 + std::abs(bn))) return bn;
    b = bn;
  }
  return b;
}

double h_at(double rho, double kappa, const ModelParams& p) {
  return h_kappa(rho, balance_beta0(rho, kappa, p), kappa, p);
}

}  // namespace

double delta_star(double kappa, const ModelParams& params) {
  params.validate();
  // Coarse scan to bracket the maximizer in rho, then golden-section.
  const double rho_max = 1.0 - 1e-9;
  const int scan = 96;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= scan; ++i) {
    double rho = rho_max * i / scan;
    double v = h_at(rho, kappa, params);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = rho_max * std::max(0, best - 1) / scan;
  double b = rho_max * std::min(scan, best + 1) / scan;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = h_at(x1, kappa, params), f2 = h_at(x2, kappa, params);
  while (b - a > 1e-13) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = h_at(x2, kappa, params);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = h_at(x1, kappa, params);
    }
  }
  return h_at(0.5 * (a + b), kappa, params);
}

SeparableSolution solve_separable(const ModelParams& params) {
  params.validate();
  if (params.mu_norm == 0.0)
    throw std::invalid_argument("mu_norm = 0 is degenerate: the margin system requires signal");
  SeparableSolution sol;
  sol.delta_star_0 = delta_star(0.0, params);
  if (!(params.delta < sol.delta_star_0))
    throw RegimeError("delta >= delta*(0) = " + std::to_string(sol.delta_star_0) +
                      ": data is not linearly separable in the limit; use the non-separable solver");

  const double m = params.mu_norm, pi = params.pi, delta = params.delta, tau = params.tau;
  // Scalar equation for rho*: increasing LHS, decreasing RHS, so the
  // bracketed root is unique.
  auto F = [&](double rho) {
    double lhs = pi * delta * g_fun(rho / (2.0 * pi * m * delta)) +
                 (1.0 - pi) * delta * g_fun(rho / (2.0 * (1.0 - pi) * m * delta));
    return lhs - (1.0 - rho * rho);
  };
  double lo = 0.0, hi = 1.0;  // F(0) = -1, F(1) > 0
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = 0.5 * (lo + hi);
    (F(mid) < 0.0 ? lo : hi) = mid;
  }
  const double rho = 0.5 * (lo + hi);

  // Closed forms: with q+ = g1_inv(rho/(2 pi |mu| delta)) (positive class)
  // and q- = g1_inv(rho/(2 (1-pi) |mu| delta)), the first-order conditions
  // read tau*kappa - rho|mu| - beta0 = q+ and kappa - rho|mu| + beta0 = q-.
  const double q_plus = g1_inv(rho / (2.0 * pi * m * delta));
  const double q_minus = g1_inv(rho / (2.0 * (1.0 - pi) * m * delta));
  sol.rho_star = rho;
  sol.kappa_star = (q_plus + q_minus + 2.0 * rho * m) / (1.0 + tau);
  sol.beta0_star = (tau * q_minus - q_plus + (tau - 1.0) * rho * m) / (1.0 + tau);

  sol.residuals[0] = std::abs(F(rho));
  sol.residuals[1] =
      std::abs(g1(tau * sol.kappa_star - rho * m - sol.beta0_star) - rho / (2.0 * pi * m * delta));
  sol.residuals[2] = std::abs(g1(sol.kappa_star - rho * m + sol.beta0_star) -
                              rho / (2.0 * (1.0 - pi) * m * delta));
  return sol;
}

TauOptResult tau_opt(const ModelParams& params) {
  ModelParams p = params;
  p.tau = 1.0;  // rho* does not depend on tau
  SeparableSolution sol = solve_separable(p);
  const double m = p.mu_norm, rho = sol.rho_star;
  double num = g1_inv(rho / (2.0 * p.pi * m * p.delta)) + rho * m;
  double den = g1_inv(rho / (2.0 * (1.0 - p.pi) * m * p.delta)) + rho * m;
  TauOptResult res;
  res.tau = num / den;
  res.degenerate_denominator = !(den > 0.0);
  return res;
}

ErrorTriple asymptotic_errors(const SeparableSolution& sol, const ModelParams& params) {
  ErrorTriple e;
  e.err_plus = std_normal_cdf(-sol.rho_star * params.mu_norm - sol.beta0_star);
  e.err_minus = std_normal_cdf(-sol.rho_star * params.mu_norm + sol.beta0_star);
  e.err_balanced = 0.5 * (e.err_plus + e.err_minus);
  return e;
}

double LimitLogitLaw::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile argument must be in (0,1)");
  double base = location + scale * std_normal_quantile(u);
  if (kind == LogitLawKind::gaussian_tld || !truncation) return base;
  // clip on the margin side: from below for class +1, from above for -1
  return class_label > 0 ? std::max(*truncation, base) : std::min(*truncation, base);
}

double LimitLogitLaw::atom_mass() const {
  if (kind == LogitLawKind::gaussian_tld || !truncation) return 0.0;
  return std_normal_cdf(class_label * (*truncation - location) / scale);
}

LimitLogitLaw LimitLogitLaw::as_margin_law() const {
  if (class_label > 0) return *this;
  LimitLogitLaw law = *this;
  law.class_label = +1;
  law.location = -location;
  if (truncation) law.truncation = -*truncation;
  return law;
}

LimitLaws limit_laws(const SeparableSolution& sol, const ModelParams& params) {
  const double m = params.mu_norm, b0 = sol.beta0_star, k = sol.kappa_star;
  const double loc_p = sol.rho_star * m + b0, loc_m = -sol.rho_star * m + b0;
  LimitLaws L;
  L.tld_plus = {LogitLawKind::gaussian_tld, +1, loc_p, 1.0, std::nullopt};
  L.tld_minus = {LogitLawKind::gaussian_tld, -1, loc_m, 1.0, std::nullopt};
  // Logit-scale truncation points y * s(y) * kappa*.
  L.eld_plus = {LogitLawKind::rectified_eld, +1, loc_p, 1.0, params.tau * k};
  L.eld_minus = {LogitLawKind::rectified_eld, -1, loc_m, 1.0, -k};
  return L;
}

}  // namespace imbl
