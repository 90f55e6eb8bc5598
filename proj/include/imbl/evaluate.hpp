// Test-error estimation: per-class misclassification rates with binomial
// standard errors, either on a materialized test set or streamed in
// blocks from the generative model (for test sets too large to hold).
#pragma once

#include "imbl/svm.hpp"

namespace imbl {

struct ErrorReport {
  double err_plus = 0.0, err_minus = 0.0, err_balanced = 0.0;
  double se_plus = 0.0, se_minus = 0.0;
  long n_plus = 0, n_minus = 0;
};

// Errors on a labeled test set; throws std::invalid_argument if either
// class is absent.
ErrorReport evaluate_errors(const TrainedClassifier& clf, const LabeledDataset& test);

// Streaming evaluation on a balanced test set of n_per_class fresh draws
// per class, generated in blocks and never materialized whole.
ErrorReport evaluate_errors_streaming(const TrainedClassifier& clf, const ModelParams& params,
                                      long n_per_class, long d, std::uint64_t seed,
                                      NoiseKind noise = NoiseKind::gaussian);

}  // namespace imbl
