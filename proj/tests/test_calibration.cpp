#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "imbl/calibration.hpp"
#include "imbl/dataset.hpp"
#include "imbl/gauss.hpp"
#include "imbl/separable.hpp"
#include "imbl/svm.hpp"

#include <cmath>
#include <vector>

using namespace imbl;

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

// tau_opt when usable, otherwise 1 (the ratio can be negative under heavy
// imbalance at large delta, where no positive ratio centers the intercept)
double usable_tau(const ModelParams& params) {
  TauOptResult t = tau_opt(params);
  return (!t.degenerate_denominator && t.tau > 0.0) ? t.tau : 1.0;
}

}  // namespace

TEST_CASE("asymptotic report: identities, special cases, ranges") {
  QuadratureRule rule = QuadratureRule::gauss_hermite(200);

  SUBCASE("zero signal: Brier score of a symmetric sigmoid") {
    SeparableSolution sol;  // rho* = beta0* = 0
    ModelParams p{0.5, 0.0, 0.5, 1.0};
    CalibrationReport rep = asymptotic_calibration(sol, p, rule);
    CHECK(rep.mse > 0.25);
    CHECK(rep.mse < 0.35);
    // mu = 0 and pi = 1/2 make the posterior constant 1/2
    CHECK(rep.v_y_given_x == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rep.m_mse == doctest::Approx(rep.mse - 0.25).epsilon(1e-12));
  }

  SUBCASE("plug-in equals recalibrated when the sigmoid arguments coincide") {
    // 2 rho m = 1 and beta0 = log(pi/(1-pi)) align both integrand arguments
    ModelParams p{0.3, 1.0, 0.5, 1.0};
    SeparableSolution sol;
    sol.rho_star = 0.5;
    sol.beta0_star = std::log(p.pi / (1.0 - p.pi));
    CalibrationReport rep = asymptotic_calibration(sol, p, rule);
    CHECK(rep.cal_err <= 1e-12);
  }

  SUBCASE("solved point: ranges, decomposition, independent posterior-variance") {
    ModelParams p{0.15, 1.75, 2.5, 1.0};
    SeparableSolution sol = solve_separable(p);
    CalibrationReport rep = asymptotic_calibration(sol, p, rule);
    for (double x : {rep.mse, rep.cal_err, rep.conf_err, rep.v_y_given_x}) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    CHECK(rep.mse == doctest::Approx(rep.v_y_given_x + rep.conf_err).epsilon(1e-8));
    CHECK(rep.m_mse == doctest::Approx(rep.mse - p.pi * (1.0 - p.pi)).epsilon(1e-12));

    // V* is the mean posterior variance E[p*(1-p*)]
    double L = std::log(p.pi / (1.0 - p.pi));
    double post_var = expect_mixture(
        [&](double y, double g) {
          double ps = sigmoid(2.0 * p.mu_norm * (p.mu_norm * y + g) + L);
          return ps * (1.0 - ps);
        },
        LabelMixture(p.pi), rule);
    CHECK(rep.v_y_given_x == doctest::Approx(post_var).epsilon(1e-10));

    // direct 2-D quadrature of E[(p_hat - p_star)^2] equals MSE* - V*
    double rm = sol.rho_star * p.mu_norm;
    double root = std::sqrt(1.0 - sol.rho_star * sol.rho_star);
    double conf_direct = 0.0;
    for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
      double inner_p = 0.0, inner_m = 0.0;
      double g = rule.nodes[a];
      for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
        double gp = sol.rho_star * g + root * rule.nodes[b];
        double dp = sigmoid(rm + g + sol.beta0_star) -
                    sigmoid(2.0 * p.mu_norm * (p.mu_norm + gp) + L);
        double dm = sigmoid(-rm + g + sol.beta0_star) -
                    sigmoid(2.0 * p.mu_norm * (-p.mu_norm + gp) + L);
        inner_p += rule.weights[b] * dp * dp;
        inner_m += rule.weights[b] * dm * dm;
      }
      conf_direct += rule.weights[a] * (p.pi * inner_p + (1.0 - p.pi) * inner_m);
    }
    CHECK(rep.conf_err == doctest::Approx(conf_direct).epsilon(1e-8));
  }
}

TEST_CASE("asymptotic metrics match a Monte-Carlo oracle") {
  ModelParams p{0.15, 1.0, 0.5, 1.0};
  p.tau = usable_tau(p);
  REQUIRE(p.tau > 0.0);
  SeparableSolution sol = solve_separable(p);
  QuadratureRule rule = QuadratureRule::gauss_hermite(200);
  CalibrationReport rep = asymptotic_calibration(sol, p, rule);

  const long N = 10000000;
  const double L = std::log(p.pi / (1.0 - p.pi));
  const double rm = sol.rho_star * p.mu_norm;
  const double root = std::sqrt(1.0 - sol.rho_star * sol.rho_star);
  Rng rng(4242);
  double s_mse = 0.0, s2_mse = 0.0, s_cal = 0.0, s2_cal = 0.0;
  double s_v = 0.0, s2_v = 0.0, s_conf = 0.0, s2_conf = 0.0;
  for (long i = 0; i < N; ++i) {
    double y = rng.uniform() < p.pi ? 1.0 : -1.0;
    double g = rng.normal(), h = rng.normal();
    double gp = sol.rho_star * g + root * h;
    double x;
    x = sigmoid(-rm - sol.beta0_star * y + g);
    x *= x;
    s_mse += x;
    s2_mse += x * x;
    x = sigmoid(2.0 * rm * (rm * y + g) + L) - sigmoid(rm * y + g + sol.beta0_star);
    x *= x;
    s_cal += x;
    s2_cal += x * x;
    x = sigmoid(-2.0 * p.mu_norm * (p.mu_norm + g) - L * y);
    x *= x;
    s_v += x;
    s2_v += x * x;
    x = sigmoid(rm * y + g + sol.beta0_star) -
        sigmoid(2.0 * p.mu_norm * (p.mu_norm * y + gp) + L);
    x *= x;
    s_conf += x;
    s2_conf += x * x;
  }
  auto check3se = [&](double quad, double sum, double sum2) {
    double mc = sum / N;
    double se = std::sqrt((sum2 / N - mc * mc) / N);
    CHECK(std::abs(quad - mc) <= 3.0 * se + 1e-12);
  };
  check3se(rep.mse, s_mse, s2_mse);
  check3se(rep.cal_err, s_cal, s2_cal);
  check3se(rep.v_y_given_x, s_v, s2_v);
  check3se(rep.conf_err, s_conf, s2_conf);
  CHECK(rep.m_mse == doctest::Approx(rep.mse - p.pi * (1.0 - p.pi)).epsilon(1e-12));
}

TEST_CASE("monotone trends of asymptotic metrics at the optimal ratio") {
  QuadratureRule rule = QuadratureRule::gauss_hermite(200);
  auto report_at = [&](double pi, double m, double delta) {
    ModelParams p{pi, m, delta, 1.0};
    p.tau = usable_tau(p);
    return asymptotic_calibration(solve_separable(p), p, rule);
  };

  SUBCASE("MSE* and mMSE* decrease in pi") {
    double prev_mse = 2.0, prev_mmse = 2.0;
    for (double pi : {0.05, 0.1, 0.2, 0.3, 0.4}) {
      CalibrationReport r = report_at(pi, 1.0, 0.5);
      CHECK(r.mse < prev_mse);
      CHECK(r.m_mse < prev_mmse);
      prev_mse = r.mse;
      prev_mmse = r.m_mse;
    }
  }

  SUBCASE("MSE* decreases in the mean separation; CalErr* too at small pi") {
    double prev_mse = 2.0, prev_cal = 2.0;
    for (double m : {0.5, 1.0, 1.5, 2.0}) {
      CalibrationReport r = report_at(0.2, m, 0.5);
      CHECK(r.mse < prev_mse);
      CHECK(r.cal_err < prev_cal);
      prev_mse = r.mse;
      prev_cal = r.cal_err;
    }
  }

  SUBCASE("MSE*, ConfErr*, CalErr* decrease in delta") {
    double prev_mse = 2.0, prev_conf = 2.0, prev_cal = 2.0;
    for (double delta : {0.3, 0.5, 0.8}) {
      CalibrationReport r = report_at(0.2, 1.0, delta);
      CHECK(r.mse < prev_mse);
      CHECK(r.conf_err < prev_conf);
      CHECK(r.cal_err < prev_cal);
      prev_mse = r.mse;
      prev_conf = r.conf_err;
      prev_cal = r.cal_err;
    }
  }
}

TEST_CASE("empirical calibration: exact cases and trained-classifier checks") {
  ModelParams p{0.25, 1.0, 2.0, 1.0};

  SUBCASE("a classifier reproducing the Bayes posterior has zero errors") {
    LabeledDataset test = sample_gmm(p, 5000, 200, 11);
    TrainedClassifier clf;
    clf.beta = 2.0 * test.mu;  // sigma(2<x,mu> + log-odds) = posterior
    clf.beta0 = std::log(p.pi / (1.0 - p.pi));
    CalibrationReport rep = empirical_calibration(clf, test, p);
    CHECK(rep.conf_err <= 1e-15);
    CHECK(rep.cal_err <= 1e-15);
    CHECK(rep.mse == doctest::Approx(rep.v_y_given_x).epsilon(1e-12));
  }

  SUBCASE("without the planted mean only the Brier score is available") {
    LabeledDataset test = sample_gmm(p, 200, 50, 12);
    TrainedClassifier clf = train_svm_hard(test, 1.0, {});
    LabeledDataset blind = test;
    blind.mu = Eigen::VectorXd();  // ground-truth direction withheld
    CalibrationReport rep = empirical_calibration(clf, blind, p);
    CHECK(std::isfinite(rep.mse));
    CHECK(std::isfinite(rep.m_mse));
    CHECK(rep.se_mse.has_value());
    CHECK(std::isnan(rep.cal_err));
    CHECK(std::isnan(rep.conf_err));
    CHECK(std::isnan(rep.v_y_given_x));
    CHECK_FALSE(rep.se_cal_err.has_value());
    CHECK_FALSE(rep.se_conf_err.has_value());
  }

  SUBCASE("Brier decomposition: MSE = E[p*(1-p*)] + ConfErr up to MC noise") {
    LabeledDataset train = sample_gmm(p, 400, 200, 13);
    TrainedClassifier clf = train_svm_hard(train, 1.0, {});
    REQUIRE(clf.separable);
    LabeledDataset test = sample_gmm(p, 20000, 200, 14);
    CalibrationReport rep = empirical_calibration(clf, test, p);
    // the gap is the mean of the mean-zero cross term 2(1{y}-p*)(p*-p_hat)
    double gap = rep.mse - rep.v_y_given_x - rep.conf_err;
    double L = std::log(p.pi / (1.0 - p.pi));
    Eigen::VectorXd f = test.features * clf.beta;
    Eigen::VectorXd pm = test.features * test.mu;
    Eigen::VectorXd cross(test.n());
    for (long i = 0; i < test.n(); ++i) {
      double ps = sigmoid(2.0 * pm(i) + L);
      double ph = sigmoid(f(i) + clf.beta0);
      double ind = test.labels(i) > 0 ? 1.0 : 0.0;
      cross(i) = 2.0 * (ind - ps) * (ps - ph);
    }
    double mc = cross.mean();
    double se = std::sqrt((cross.array() - mc).square().sum() /
                          (test.n() - 1.0) / test.n());
    CHECK(gap == doctest::Approx(mc).epsilon(1e-10));
    CHECK(std::abs(gap) <= 3.0 * se + 1e-12);
  }

  SUBCASE("replicate means match the asymptotic report at the optimal ratio") {
    ModelParams q{0.25, 1.0, 2.0, 1.0};
    q.tau = usable_tau(q);
    REQUIRE(q.tau > 1.0);  // this cell has a genuine positive optimum
    SeparableSolution sol = solve_separable(q);
    CalibrationReport asym = asymptotic_calibration(sol, q, QuadratureRule::gauss_hermite(200));
    double s_mse = 0.0, s_cal = 0.0, s_conf = 0.0;
    const int reps = 5;
    for (int r = 0; r < reps; ++r) {
      LabeledDataset train = sample_gmm(q, 1000, 500, 100 + r);
      TrainedClassifier clf = train_svm_hard(train, q.tau, {});
      REQUIRE(clf.separable);
      LabeledDataset test = sample_gmm(q, 20000, 500, 200 + r);
      CalibrationReport rep = empirical_calibration(clf, test, q);
      s_mse += rep.mse;
      s_cal += rep.cal_err;
      s_conf += rep.conf_err;
    }
    // finite-size bias at n=1000 dominates the tiny MC errors; a coarse
    // band documents the agreement without overclaiming
    CHECK(std::abs(s_mse / reps - asym.mse) <= 0.03);
    CHECK(std::abs(s_cal / reps - asym.cal_err) <= 0.03);
    CHECK(std::abs(s_conf / reps - asym.conf_err) <= 0.03);
  }
}

TEST_CASE("reliability bins: exact bin placement and binned decomposition") {
  ModelParams p{0.5, 1.0, 0.5, 1.0};

  SUBCASE("constant confidence occupies a single bin") {
    LabeledDataset data;
    data.features = MatrixRM::Zero(50, 3);
    data.labels = Eigen::VectorXi::Constant(50, 1);
    data.n_plus = 50;
    data.n_minus = 0;
    data.mu = Eigen::VectorXd::Zero(3);
    TrainedClassifier clf;
    clf.beta = Eigen::VectorXd::Zero(3);
    double eps = 0.01;
    clf.beta0 = std::log((0.5 + eps) / (0.5 - eps));  // sigmoid -> 0.51
    ReliabilityBins bins = reliability_bins(clf, data, 10);
    CHECK(bins.count[5] == 50);  // (0.5, 0.6]
    for (int b = 0; b < 10; ++b)
      if (b != 5) CHECK(bins.count[b] == 0);
    CHECK(bins.acc[5] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(bins.conf[5] == doctest::Approx(0.51).epsilon(1e-12));
    CHECK(bins.ece_like == doctest::Approx(0.49 * 0.49).epsilon(1e-9));
  }

  SUBCASE("bad bin counts are rejected") {
    LabeledDataset data = sample_gmm(p, 50, 10, 3);
    TrainedClassifier clf;
    clf.beta = Eigen::VectorXd::Zero(10);
    CHECK_THROWS_AS(reliability_bins(clf, data, 1), std::invalid_argument);
  }

  SUBCASE("balanced training stays near the diagonal; identity is exact") {
    LabeledDataset train = sample_gmm(p, 1000, 2000, 21);
    TrainedClassifier clf = train_svm_hard(train, 1.0, {});
    REQUIRE(clf.separable);
    LabeledDataset test = sample_gmm(p, 20000, 2000, 22);
    ReliabilityBins bins = reliability_bins(clf, test, 10);
    for (int b = 0; b < 10; ++b)
      if (bins.count[b] >= 100) CHECK(std::abs(bins.acc[b] - bins.conf[b]) <= 0.1);
    CHECK(bins.mse_binned ==
          doctest::Approx(bins.uncertainty - bins.sharpness + bins.cal_err_binned)
              .epsilon(1e-12));
  }

  SUBCASE("imbalance worsens the binned calibration error") {
    // The trend is a statement about the margin-rebalanced optimum, so it is
    // only meaningful where the optimal ratio exists (tau_opt > 0).  At
    // m = 1, delta = 2 that holds for pi >= ~0.22; below that the ratio
    // degenerates and the tau = 1 fallback produces a confidently-majority
    // classifier whose binned error is tiny, breaking monotonicity.
    auto mean_ece = [&](double pi) {
      ModelParams q{pi, 1.0, 2.0, 1.0};
      TauOptResult t = tau_opt(q);
      REQUIRE(!t.degenerate_denominator);
      REQUIRE(t.tau > 0.0);
      q.tau = t.tau;
      double acc = 0.0;
      const int reps = 10;
      for (int r = 0; r < reps; ++r) {
        LabeledDataset train = sample_gmm(q, 1000, 500, 500 + r);
        TrainedClassifier clf = train_svm_hard(train, q.tau, {});
        LabeledDataset test = sample_gmm(q, 10000, 500, 600 + r);
        acc += reliability_bins(clf, test, 10).ece_like;
      }
      return acc / reps;
    };
    double ece_low = mean_ece(0.25);
    double ece_mid = mean_ece(0.35);
    double ece_high = mean_ece(0.5);
    CHECK(ece_low > ece_mid);
    CHECK(ece_mid > ece_high);
  }
}
