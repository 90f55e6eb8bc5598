#include "imbl/logistic.hpp"

#include "imbl/logistic_loss.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace imbl {

namespace {

double objective(const Eigen::VectorXd& z, const Eigen::VectorXd& beta, double ridge, long n) {
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += logistic_loss(z(i));
  return s / n + 0.5 * ridge * beta.squaredNorm();
}

}  // namespace

TrainedClassifier train_logistic(const LabeledDataset& data, double tau, double ridge,
                                 const LogisticOptions& opts) {
  if (!(tau > 0.0)) throw std::invalid_argument("train_logistic: tau must be positive");
  if (ridge < 0.0) throw std::invalid_argument("train_logistic: ridge must be nonnegative");

  TrainedClassifier clf;
  clf.tau = tau;
  clf.kind = ClassifierKind::logistic;
  clf.beta = Eigen::VectorXd::Zero(data.d());
  if (data.degenerate()) {
    clf.degenerate = true;
    clf.beta0 = data.n_plus == 0 ? -1.0 : 1.0;
    return clf;
  }

  const long n = data.n(), d = data.d();
  const MatrixRM& X = data.features;
  // rebalanced labels y_i / s(y_i) with s(+1) = tau, s(-1) = 1
  Eigen::VectorXd yt(n);
  for (long i = 0; i < n; ++i) yt(i) = data.labels(i) > 0 ? 1.0 / tau : -1.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  double beta0 = 0.0;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);  // <x_i, beta> + beta0
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);  // yt_i * f_i

  for (long iter = 0; iter < opts.max_iter; ++iter) {
    Eigen::VectorXd u(n), w(n);
    for (long i = 0; i < n; ++i) {
      u(i) = logistic_dloss(z(i)) * yt(i);
      w(i) = logistic_ddloss(z(i)) * yt(i) * yt(i);
    }
    Eigen::VectorXd g_beta = X.transpose() * u / n + ridge * beta;
    double g0 = u.mean();
    double gnorm = std::sqrt(g_beta.squaredNorm() + g0 * g0);
    if (gnorm <= opts.grad_tol) {
      if (ridge == 0.0) {
        // an unregularized minimizer must misclassify something: if every
        // margin is positive, scaling up (beta, beta0) lowers the loss
        double zmin = z.minCoeff();
        if (zmin > 0.0)
          throw DivergenceError(
              "logistic objective has no finite minimizer on separable data; set ridge > 0");
      }
      break;
    }
    if (ridge == 0.0 && beta.norm() > opts.norm_guard)
      throw DivergenceError(
          "logistic iterates diverging (separable data with ridge = 0); set ridge > 0");
    if (iter == opts.max_iter - 1) {
      std::ostringstream msg;
      msg << "logistic Newton stalled: gradient norm " << gnorm << " after " << opts.max_iter
          << " iterations";
      throw std::runtime_error(msg.str());
    }

    // Newton system on (beta, beta0); fall back to a gradient step if the
    // factorization is unusable
    Eigen::VectorXd dir_beta;
    double dir0;
    {
      MatrixRM SX = w.cwiseSqrt().asDiagonal() * X;
      Eigen::MatrixXd H(d + 1, d + 1);
      H.topLeftCorner(d, d).noalias() = SX.transpose() * SX / n;
      H.topLeftCorner(d, d).diagonal().array() += ridge;
      Eigen::VectorXd hb0 = X.transpose() * w / n;
      H.block(0, d, d, 1) = hb0;
      H.block(d, 0, 1, d) = hb0.transpose();
      H(d, d) = w.mean();
      Eigen::VectorXd g(d + 1);
      g.head(d) = g_beta;
      g(d) = g0;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      Eigen::VectorXd step = ldlt.solve(-g);
      bool ok = ldlt.info() == Eigen::Success && step.allFinite() &&
                step.dot(-g) > 0.0;  // descent direction
      if (!ok) step = -g;
      dir_beta = step.head(d);
      dir0 = step(d);
    }

    // Armijo backtracking reusing one matrix-vector product; near the
    // optimum objective differences underflow, so a step that shrinks the
    // gradient norm is also accepted (plain Newton contraction)
    Eigen::VectorXd Xdir = X * dir_beta;
    double slope = g_beta.dot(dir_beta) + g0 * dir0;  // < 0
    double L0 = objective(z, beta, ridge, n);
    auto grad_norm_at = [&](const Eigen::VectorXd& z_try, const Eigen::VectorXd& b_try) {
      Eigen::VectorXd u_try(n);
      for (long i = 0; i < n; ++i) u_try(i) = logistic_dloss(z_try(i)) * yt(i);
      Eigen::VectorXd gb = X.transpose() * u_try / n + ridge * b_try;
      double g0_try = u_try.mean();
      return std::sqrt(gb.squaredNorm() + g0_try * g0_try);
    };
    double t = 1.0;
    for (int half = 0; half < 60; ++half) {
      Eigen::VectorXd f_try = f + t * (Xdir.array() + dir0).matrix();
      Eigen::VectorXd z_try = f_try.cwiseProduct(yt);
      Eigen::VectorXd b_try = beta + t * dir_beta;
      bool armijo = objective(z_try, b_try, ridge, n) <= L0 + 1e-4 * t * slope;
      if (armijo || (half == 0 && grad_norm_at(z_try, b_try) <= 0.9 * gnorm)) {
        beta = b_try;
        beta0 += t * dir0;
        f = f_try;
        z = z_try;
        break;
      }
      t *= 0.5;
      if (half == 59) throw std::runtime_error("logistic line search failed to make progress");
    }
  }

  clf.beta = beta;
  clf.beta0 = beta0;
  double mn = data.mu.norm(), bn = beta.norm();
  clf.rho_hat = (mn > 0.0 && bn > 0.0) ? beta.dot(data.mu) / (mn * bn) : 0.0;
  return clf;
}

}  // namespace imbl
