#include "imbl/gauss.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace imbl {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;
constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490;
}  // namespace

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// 0.5*erfc(-x/sqrt(2)); glibc's erfc keeps ~1e-15 relative error even in the
// far tail, which the downstream Newton solvers rely on.
double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// Acklam's rational initial guess polished by one Halley step on
// Phi(x) - p = 0; exact to full double precision over (0,1).
double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("std_normal_quantile: p must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double e = std_normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);  // Halley
}

double g1(double x) { return x * std_normal_cdf(x) + std_normal_pdf(x); }

double g2(double x) { return (x * x + 1.0) * std_normal_cdf(x) + x * std_normal_pdf(x); }

double g1_inv(double y) {
  if (!(y > 0.0)) throw std::domain_error("g1_inv: argument must be positive");
  // g1(x) > x gives the upper end; grow the lower end until g1(lo) < y.
  double hi = std::max(y, 10.0);
  double lo = std::min(y - 1.0, -10.0);
  while (g1(lo) >= y) {
    lo *= 2.0;
    if (lo < -1e4) break;  // y below double-representable g1 range
  }
  double x = (y > 0.5) ? y : 0.0;  // g1(x) ~ x for large x
  if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double f = g1(x) - y;
    if (f > 0.0) hi = x; else lo = x;
    double deriv = std_normal_cdf(x);
    double step = f / deriv;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // bisection safeguard
    if (std::abs(xn - x) < 1e-15 * (1.0 + std::abs(x))) { x = xn; break; }
    x = xn;
  }
  return x;
}

double g_fun(double y) { return g2(g1_inv(y)); }

QuadratureRule QuadratureRule::gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  // Probabilists' Hermite Jacobi matrix: zero diagonal, offdiag sqrt(k).
  // Eigenvalues are the nodes on the N(0,1) scale; weights are the squared
  // first eigenvector components (total mass 1).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(order > 1 ? order - 1 : 1);
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(std::max(order - 1, 0)));
  QuadratureRule rule;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  return rule;
}

}  // namespace imbl
