// Hard-margin SVM with margin rebalancing. The tau=1 problem is solved
// once through its dual (SMO-style paired coordinate ascent); other tau
// are obtained by the exact post-hoc intercept/margin adjustment. A
// direct trainer for arbitrary per-class target margins backs the
// post-hoc identity's cross-check.
#pragma once

#include "imbl/dataset.hpp"

#include <vector>

namespace imbl {

enum class ClassifierKind { svm, logistic };

struct TrainedClassifier {
  Eigen::VectorXd beta;   // unit norm for separable SVM
  double beta0 = 0.0;
  double kappa_hat = 0.0; // max margin (0 when degenerate or non-separable)
  double tau = 1.0;
  ClassifierKind kind = ClassifierKind::svm;
  double rho_hat = 0.0;   // <beta/|beta|, mu/|mu|> when mu is known
  std::vector<long> support_plus, support_minus;  // svm only
  bool degenerate = false;  // one-class training set
  bool separable = true;    // svm: dual bounded (hard margin exists)

  double logit(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return x.dot(beta) + beta0;
  }
  // Strict-positivity convention: logit <= 0 predicts -1.
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return logit(x) > 0.0 ? +1 : -1;
  }
};

struct SvmOptions {
  double kkt_tol = 1e-8;       // max KKT violation at convergence
  long max_passes = 200000;    // cap on working-set selections x n
  double kappa_min = 1e-5;     // |w| > 1/kappa_min certifies non-separability
  long cache_columns = 1024;   // LRU kernel-column cache size
};

// Trains at tau=1 and applies the post-hoc adjustment
//   beta(tau) = beta(1), beta0(tau) = beta0(1) + (tau-1)/(tau+1) kappa(1),
//   kappa(tau) = 2 kappa(1)/(tau+1).
// Non-separable data is reported via separable=false (not an error);
// degenerate (one-class) data via degenerate=true with kappa_hat = 0.
TrainedClassifier train_svm_hard(const LabeledDataset& data, double tau,
                                 const SvmOptions& opts = {});

// Solves min |w|^2 s.t. y_i(<x_i,w> + w0) >= s(y_i) directly with
// per-class target margins s(+1)=tau, s(-1)=1 (the transformed-label
// primal). Used to validate the post-hoc adjustment.
TrainedClassifier train_svm_direct(const LabeledDataset& data, double tau,
                                   const SvmOptions& opts = {});

// Certified separability verdict without solving the SVM: pairwise
// Frank-Wolfe on the distance between the class hulls, with two-sided
// certificates at geometric-margin resolution opts.kappa_min (margins
// below the resolution count as overlapping). Much cheaper than a full
// solve near the separability threshold, where the margin vanishes.
// One-class data is trivially separable; throws std::runtime_error if
// the certificate budget opts.max_passes is exhausted undecided.
bool is_linearly_separable(const LabeledDataset& data, const SvmOptions& opts = {});

}  // namespace imbl
