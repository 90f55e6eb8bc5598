// Standard-normal special functions, the truncated moment functions
// g1, g2 (first/second moment of the positive part of a shifted normal)
// and their composition g = g2 o g1^{-1}, plus Gauss-Hermite quadrature
// for expectations over (Y, G) ~ Bernoulli(pi) x N(0,1).
#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

namespace imbl {

double std_normal_pdf(double x);
double std_normal_cdf(double x);      // Phi(x), relative accuracy ~1e-15
double std_normal_quantile(double p); // Phi^{-1}(p), p in (0,1)

// g1(x) = E[(G + x)_+] = x*Phi(x) + phi(x). Strictly increasing, > max(0,x).
double g1(double x);

// g2(x) = E[(G + x)_+^2] = (x^2 + 1)*Phi(x) + x*phi(x). Strictly increasing.
double g2(double x);

// Inverse of g1 on (0, inf). Safeguarded Newton (g1' = Phi) inside a
// bracket grown geometrically until it straddles y. Throws on y <= 0.
double g1_inv(double y);

// g(y) = g2(g1_inv(y)). Strictly increasing with g(0+) = 0, g(y) ~ y^2.
double g_fun(double y);

// Nodes/weights integrating f against the standard normal density:
// E[f(G)] ~= sum_i weights[i] * f(nodes[i]). Weights sum to 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;

  // Golub-Welsch on the probabilists' Hermite recurrence.
  static QuadratureRule gauss_hermite(int order);

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

// Class prior P(Y = +1) = pi_plus.
struct LabelMixture {
  double pi_plus;
  explicit LabelMixture(double p) : pi_plus(p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("LabelMixture: pi must be in (0,1)");
  }
};

// E[f(Y, G)] = pi * E[f(+1, G)] + (1 - pi) * E[f(-1, G)] via the rule.
template <class F>
double expect_mixture(F&& f, LabelMixture pi, const QuadratureRule& rule) {
  double plus = 0.0, minus = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    plus += rule.weights[i] * f(+1, rule.nodes[i]);
    minus += rule.weights[i] * f(-1, rule.nodes[i]);
  }
  return pi.pi_plus * plus + (1.0 - pi.pi_plus) * minus;
}

}  // namespace imbl
