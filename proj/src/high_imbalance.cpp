#include "imbl/high_imbalance.hpp"

#include "imbl/svm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace imbl {

ConstructedBound constructed_solution(const LabeledDataset& data) {
  if (data.degenerate())
    throw std::invalid_argument("constructed_solution: both classes must be present");
  if (data.mu.size() != data.d() || data.mu.norm() == 0.0)
    throw std::invalid_argument("constructed_solution: planted mean must be known and nonzero");

  const long n = data.n();
  const long d = data.d();
  const double mu_norm = data.mu.norm();
  const Eigen::VectorXd u = data.mu / mu_norm;

  // Class means of the noise z_i = x_i - y_i * mu.
  Eigen::VectorXd zbar_p = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd zbar_m = Eigen::VectorXd::Zero(d);
  for (long i = 0; i < n; ++i) {
    if (data.labels(i) > 0)
      zbar_p += data.features.row(i);
    else
      zbar_m += data.features.row(i);
  }
  zbar_p = zbar_p / static_cast<double>(data.n_plus) - data.mu;
  zbar_m = zbar_m / static_cast<double>(data.n_minus) + data.mu;

  const double gbar_p = zbar_p.dot(u);
  const double gbar_m = zbar_m.dot(u);
  const double g_tilde = 0.5 * (gbar_p - gbar_m);

  const Eigen::VectorXd z_tilde = 0.5 * (zbar_p - zbar_m);
  const Eigen::VectorXd z_perp = z_tilde - z_tilde.dot(u) * u;

  // The bound is sqrt(A^2 + B^2) with A the signal seen along mu and B the
  // exploitable cross-class noise; the construction aims the direction at
  // the maximizing (rho, theta) pair.
  const double A = mu_norm + g_tilde;
  const double B = z_perp.norm();

  ConstructedBound out;
  out.kappa_bar = std::hypot(A, B);
  if (!(out.kappa_bar > 0.0))
    throw std::runtime_error("constructed_solution: vanishing bound (signal cancelled exactly)");
  out.rho_tilde = A / out.kappa_bar;
  // sin of the direction's angle to mu; equals sqrt(1 - rho^2) but stays
  // exact as rho -> 1.
  const double st = B / out.kappa_bar;
  const Eigen::VectorXd theta =
      B > 0.0 ? Eigen::VectorXd(z_perp / B) : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
  out.beta0_tilde =
      -out.rho_tilde * 0.5 * (gbar_p + gbar_m) - st * (0.5 * (zbar_p + zbar_m)).dot(theta);

  const Eigen::VectorXd beta = out.rho_tilde * u + st * theta;
  const Eigen::VectorXd f = data.features * beta;
  double kmin = std::numeric_limits<double>::infinity();
  for (long i = 0; i < n; ++i) {
    const double m = static_cast<double>(data.labels(i)) * (f(i) + out.beta0_tilde);
    if (m < kmin) kmin = m;
  }
  out.kappa_constructed = kmin;
  return out;
}

Phase phase_classify(const HighImbConfig& cfg) {
  cfg.validate();
  const double gap = cfg.a - cfg.c;
  const double edge_tol = 1e-9;
  if (std::abs(gap - cfg.b) <= edge_tol || std::abs(gap - 2.0 * cfg.b) <= edge_tol)
    return Phase::boundary;
  if (gap < cfg.b) return Phase::high_signal;
  if (gap < 2.0 * cfg.b) return Phase::moderate_signal;
  return Phase::low_signal;
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::high_signal: return "high_signal";
    case Phase::moderate_signal: return "moderate_signal";
    case Phase::low_signal: return "low_signal";
    case Phase::boundary: return "boundary";
  }
  return "unknown";
}

std::vector<PhaseRepResult> run_phase_experiment(const HighImbConfig& cfg, int reps,
                                                 std::uint64_t master_seed, long test_per_class,
                                                 NoiseKind noise) {
  cfg.validate();
  if (reps < 0) throw std::invalid_argument("run_phase_experiment: reps must be nonnegative");
  if (test_per_class < 1)
    throw std::invalid_argument("run_phase_experiment: test_per_class must be positive");

  // Balanced test mixture with the instance's planted mean; only mu_norm
  // and the class-conditional law matter for streaming evaluation.
  ModelParams test_params;
  test_params.pi = 0.5;
  test_params.mu_norm = cfg.mu_norm();
  test_params.delta = 1.0;
  test_params.tau = 1.0;

  std::vector<PhaseRepResult> out;
  out.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t train_seed = Rng::derive(master_seed, 2 * static_cast<std::uint64_t>(r));
    const std::uint64_t test_seed =
        Rng::derive(master_seed, 2 * static_cast<std::uint64_t>(r) + 1);

    auto [ds, tau_d] = high_imb_instance(cfg, train_seed, noise);
    PhaseRepResult res;
    if (ds.degenerate()) {
      res.degenerate = true;
      out.push_back(res);
      continue;
    }

    const ConstructedBound cb = constructed_solution(ds);
    res.kappa_bar = cb.kappa_bar;
    res.kappa_constructed = cb.kappa_constructed;

    TrainedClassifier clf = train_svm_hard(ds, tau_d, {});
    res.separable = clf.separable;
    // The trainer reports the margin at tau_d; undo the rebalancing scale
    // so the sandwich against the tau = 1 bound is like-for-like.
    res.kappa_hat = clf.kappa_hat * (tau_d + 1.0) / 2.0;

    const ErrorReport er =
        evaluate_errors_streaming(clf, test_params, test_per_class, cfg.d, test_seed, noise);
    res.err_plus = er.err_plus;
    res.err_minus = er.err_minus;
    res.err_balanced = er.err_balanced;
    out.push_back(res);
  }
  return out;
}

}  // namespace imbl
