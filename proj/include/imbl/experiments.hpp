// Replicate-level experiment driver shared by the CLI and the acceptance
// suite: sample -> train -> evaluate -> logit analytics -> calibration,
// with seeds derived per replicate from one master seed and optional
// thread-parallel execution.
#pragma once

#include "imbl/calibration.hpp"
#include "imbl/evaluate.hpp"
#include "imbl/logistic.hpp"
#include "imbl/logits.hpp"
#include "imbl/svm.hpp"

#include <string>
#include <vector>

namespace imbl {

struct ReplicateSpec {
  ModelParams params;
  long n = 1000;
  long d = 500;
  ClassifierKind kind = ClassifierKind::svm;
  double ridge = 0.0;             // logistic only
  long err_test_per_class = 0;    // balanced streaming test set (0 = skip)
  long cal_test_n = 0;            // pi-imbalanced test set for calibration (0 = skip)
  bool want_w2 = false;           // per-class training-logit W2 vs theory
  NoiseKind noise = NoiseKind::gaussian;
};

struct ReplicateResult {
  bool separable = true, degenerate = false, failed = false;
  std::string error;
  double kappa_hat = 0.0, rho_hat = 0.0, beta0_hat = 0.0, beta_norm = 0.0;
  ErrorReport errors;
  bool has_errors = false;
  double w2_plus = 0.0, w2_minus = 0.0;
  bool has_w2 = false;
  CalibrationReport cal;
  bool has_cal = false;
};

ReplicateResult run_replicate(const ReplicateSpec& spec, std::uint64_t seed);

// reps replicates with seeds derived from master_seed; workers <= 0 means
// default_worker_count(). Per-replicate failures are recorded in the
// result, never thrown.
std::vector<ReplicateResult> run_replicates(const ReplicateSpec& spec, int reps,
                                            std::uint64_t master_seed, int workers = 0);

// IMBL_WORKERS env var if set, else hardware concurrency (min 1).
int default_worker_count();

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  long n = 0;
};
Summary summarize(const std::vector<double>& values);

}  // namespace imbl
