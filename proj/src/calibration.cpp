#include "imbl/calibration.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace imbl {

namespace {

// numerically stable logistic sigmoid
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

double se_of(const Eigen::VectorXd& v) {
  const double n = static_cast<double>(v.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double m = v.mean();
  double var = (v.array() - m).square().sum() / (n - 1.0);
  return std::sqrt(var / n);
}

}  // namespace

CalibrationReport asymptotic_calibration(const SeparableSolution& sol, const ModelParams& params,
                                         const QuadratureRule& rule) {
  const double m = params.mu_norm;
  const double rm = sol.rho_star * m;
  const double b0 = sol.beta0_star;
  const double L = std::log(params.pi / (1.0 - params.pi));

  CalibrationReport rep;
  rep.source = CalibrationSource::asymptotic;
  rep.mse = expect_mixture(
      [&](double y, double g) {
        double s = sigmoid(-rm - b0 * y + g);
        return s * s;
      },
      LabelMixture(params.pi), rule);
  rep.cal_err = expect_mixture(
      [&](double y, double g) {
        double d = sigmoid(2.0 * rm * (rm * y + g) + L) - sigmoid(rm * y + g + b0);
        return d * d;
      },
      LabelMixture(params.pi), rule);
  rep.v_y_given_x = expect_mixture(
      [&](double y, double g) {
        double s = sigmoid(-2.0 * m * (m + g) - L * y);
        return s * s;
      },
      LabelMixture(params.pi), rule);
  rep.conf_err = std::max(0.0, rep.mse - rep.v_y_given_x);
  rep.m_mse = rep.mse - params.pi * (1.0 - params.pi);
  return rep;
}

CalibrationReport empirical_calibration(const TrainedClassifier& clf, const LabeledDataset& test,
                                        const ModelParams& params) {
  const long n = test.n();
  if (n == 0) throw std::invalid_argument("empirical_calibration: empty test set");
  if (clf.beta.size() != test.d())
    throw std::invalid_argument("empirical_calibration: classifier dimension mismatch");
  const double L = std::log(params.pi / (1.0 - params.pi));

  Eigen::VectorXd f = test.features * clf.beta;
  Eigen::VectorXd sq_mse(n);
  for (long i = 0; i < n; ++i) {
    double p_hat = sigmoid(f(i) + clf.beta0);
    double ind = test.labels(i) > 0 ? 1.0 : 0.0;
    sq_mse(i) = (ind - p_hat) * (ind - p_hat);
  }
  CalibrationReport rep;
  rep.source = CalibrationSource::empirical;
  rep.mse = mean_of(sq_mse);
  rep.se_mse = se_of(sq_mse);
  rep.m_mse = rep.mse - params.pi * (1.0 - params.pi);

  // The posterior-based metrics need the planted mean; without it they are
  // reported as NaN with no standard errors.
  if (test.mu.size() != test.d()) {
    rep.cal_err = rep.conf_err = rep.v_y_given_x = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }

  const double mu_norm = test.mu.norm();
  const double bn = clf.beta.norm();
  const double rho_hat = (bn > 0.0 && mu_norm > 0.0) ? clf.beta.dot(test.mu) / (bn * mu_norm) : 0.0;
  Eigen::VectorXd proj_mu = test.features * test.mu;  // <x_i, mu>
  Eigen::VectorXd sq_cal(n), sq_conf(n), sq_v(n);
  for (long i = 0; i < n; ++i) {
    double p_hat = sigmoid(f(i) + clf.beta0);
    double p_star = sigmoid(2.0 * proj_mu(i) + L);
    // posterior given the learned projection; scale-invariant in beta
    double t = bn > 0.0 ? f(i) / bn : 0.0;
    double p_hat0 = bn > 0.0 ? sigmoid(2.0 * rho_hat * mu_norm * t + L) : params.pi;
    double ind = test.labels(i) > 0 ? 1.0 : 0.0;
    sq_cal(i) = (p_hat - p_hat0) * (p_hat - p_hat0);
    sq_conf(i) = (p_hat - p_star) * (p_hat - p_star);
    sq_v(i) = (ind - p_star) * (ind - p_star);
  }
  rep.cal_err = mean_of(sq_cal);
  rep.conf_err = mean_of(sq_conf);
  rep.v_y_given_x = mean_of(sq_v);
  rep.se_cal_err = se_of(sq_cal);
  rep.se_conf_err = se_of(sq_conf);
  rep.se_v = se_of(sq_v);
  return rep;
}

ReliabilityBins reliability_bins(const TrainedClassifier& clf, const LabeledDataset& test, int M) {
  if (M < 2) throw std::invalid_argument("reliability_bins: need at least 2 bins");
  if (clf.beta.size() != test.d())
    throw std::invalid_argument("reliability_bins: classifier dimension mismatch");
  const long n = test.n();
  if (n == 0) throw std::invalid_argument("reliability_bins: empty test set");

  ReliabilityBins bins;
  bins.M = M;
  bins.count.assign(M, 0);
  bins.conf.assign(M, 0.0);
  bins.acc.assign(M, 0.0);

  Eigen::VectorXd f = test.features * clf.beta;
  std::vector<int> bin_of(n);
  double ybar = 0.0;
  for (long i = 0; i < n; ++i) {
    double p = sigmoid(f(i) + clf.beta0);
    // bins are ((m-1)/M, m/M]; the clamp only absorbs underflow at p ~ 0
    int idx = std::min<int>(M - 1, std::max<int>(0, static_cast<int>(std::ceil(p * M)) - 1));
    bin_of[i] = idx;
    bins.count[idx] += 1;
    bins.conf[idx] += p;
    double ind = test.labels(i) > 0 ? 1.0 : 0.0;
    bins.acc[idx] += ind;
    ybar += ind;
  }
  ybar /= static_cast<double>(n);
  for (int b = 0; b < M; ++b) {
    if (bins.count[b] == 0) continue;
    bins.conf[b] /= static_cast<double>(bins.count[b]);
    bins.acc[b] /= static_cast<double>(bins.count[b]);
  }

  for (int b = 0; b < M; ++b) {
    double w = static_cast<double>(bins.count[b]) / static_cast<double>(n);
    double gap = bins.acc[b] - bins.conf[b];
    bins.ece_like += w * gap * gap;
    double res = bins.acc[b] - ybar;
    bins.sharpness += w * res * res;
  }
  bins.cal_err_binned = bins.ece_like;
  bins.uncertainty = ybar * (1.0 - ybar);
  // mse of the binned predictor, computed directly so the decomposition
  // identity is a genuine consistency check
  double acc_sq = 0.0;
  for (long i = 0; i < n; ++i) {
    double ind = test.labels(i) > 0 ? 1.0 : 0.0;
    double diff = ind - bins.conf[bin_of[i]];
    acc_sq += diff * diff;
  }
  bins.mse_binned = acc_sq / static_cast<double>(n);
  return bins;
}

}  // namespace imbl
