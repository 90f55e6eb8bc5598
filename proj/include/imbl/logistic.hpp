// Logistic regression with rebalanced labels y_i/s(y_i) and optional
// ridge penalty on beta (never on the intercept). Newton with line
// search to gradient norm 1e-10.
#pragma once

#include "imbl/svm.hpp"

namespace imbl {

// Raised when ridge = 0 on separable data: the objective has no finite
// minimizer and the iterates diverge in norm.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LogisticOptions {
  double grad_tol = 1e-10;
  long max_iter = 500;
  double norm_guard = 1e4;  // |beta| beyond this with ridge=0 => divergence
};

TrainedClassifier train_logistic(const LabeledDataset& data, double tau, double ridge,
                                 const LogisticOptions& opts = {});

}  // namespace imbl
