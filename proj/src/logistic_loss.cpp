#include "imbl/logistic_loss.hpp"

#include <cmath>

namespace imbl {

double sigmoid(double t) {
  // exp only ever sees a nonpositive argument
  if (t >= 0.0) {
    double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(t);
  return e / (1.0 + e);
}

double logistic_loss(double t) {
  if (t >= 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

double logistic_dloss(double t) { return -sigmoid(-t); }

double logistic_ddloss(double t) {
  double s = sigmoid(t);
  return s * (1.0 - s);
}

}  // namespace imbl
