// Numerically stable logistic loss l(t) = log(1 + exp(-t)), its first two
// derivatives, and the sigmoid. Stable for |t| far beyond 700 (no overflow:
// exp is only ever taken of a nonpositive argument).
#pragma once

namespace imbl {

double sigmoid(double t);         // 1 / (1 + exp(-t))
double logistic_loss(double t);   // log(1 + exp(-t))
double logistic_dloss(double t);  // -1 / (1 + exp(t)) = -sigmoid(-t)
double logistic_ddloss(double t); // sigmoid(t) * sigmoid(-t)

}  // namespace imbl
