#include "imbl/evaluate.hpp"

#include <cmath>
#include <stdexcept>

namespace imbl {

namespace {

double binom_se(double p, long n) { return n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0; }

}  // namespace

ErrorReport evaluate_errors(const TrainedClassifier& clf, const LabeledDataset& test) {
  if (test.n_plus == 0 || test.n_minus == 0)
    throw std::invalid_argument("evaluate_errors: test set must contain both classes");
  if (test.d() != clf.beta.size())
    throw std::invalid_argument("evaluate_errors: dimension mismatch");

  Eigen::VectorXd logits = test.features * clf.beta;
  logits.array() += clf.beta0;
  long wrong_plus = 0, wrong_minus = 0;
  for (long i = 0; i < test.n(); ++i) {
    // ties at the boundary predict -1
    if (test.labels(i) > 0 && logits(i) <= 0.0) ++wrong_plus;
    if (test.labels(i) < 0 && logits(i) > 0.0) ++wrong_minus;
  }
  ErrorReport rep;
  rep.n_plus = test.n_plus;
  rep.n_minus = test.n_minus;
  rep.err_plus = static_cast<double>(wrong_plus) / test.n_plus;
  rep.err_minus = static_cast<double>(wrong_minus) / test.n_minus;
  rep.err_balanced = 0.5 * (rep.err_plus + rep.err_minus);
  rep.se_plus = binom_se(rep.err_plus, rep.n_plus);
  rep.se_minus = binom_se(rep.err_minus, rep.n_minus);
  return rep;
}

ErrorReport evaluate_errors_streaming(const TrainedClassifier& clf, const ModelParams& params,
                                      long n_per_class, long d, std::uint64_t seed,
                                      NoiseKind noise) {
  if (n_per_class < 1) throw std::invalid_argument("evaluate_errors_streaming: empty test class");
  if (d != clf.beta.size())
    throw std::invalid_argument("evaluate_errors_streaming: dimension mismatch");

  long wrong[2] = {0, 0};
  for (int c = 0; c < 2; ++c) {
    int y = c == 0 ? 1 : -1;
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(c + 1)));
    double base = clf.beta0 + y * params.mu_norm * clf.beta(0);  // mu sits on axis 1
    for (long i = 0; i < n_per_class; ++i) {
      double acc = base;
      switch (noise) {
        case NoiseKind::gaussian:
          for (long j = 0; j < d; ++j) acc += clf.beta(j) * rng.normal();
          break;
        case NoiseKind::rademacher:
          for (long j = 0; j < d; ++j) acc += clf.beta(j) * rng.rademacher();
          break;
        default:
          for (long j = 0; j < d; ++j) acc += clf.beta(j) * rng.uniform_pm();
      }
      if (y > 0 ? acc <= 0.0 : acc > 0.0) ++wrong[c];
    }
  }
  ErrorReport rep;
  rep.n_plus = rep.n_minus = n_per_class;
  rep.err_plus = static_cast<double>(wrong[0]) / n_per_class;
  rep.err_minus = static_cast<double>(wrong[1]) / n_per_class;
  rep.err_balanced = 0.5 * (rep.err_plus + rep.err_minus);
  rep.se_plus = binom_se(rep.err_plus, rep.n_plus);
  rep.se_minus = binom_se(rep.err_minus, rep.n_minus);
  return rep;
}

}  // namespace imbl
