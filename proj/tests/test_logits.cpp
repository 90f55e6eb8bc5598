#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "imbl/dataset.hpp"
#include "imbl/gauss.hpp"
#include "imbl/logits.hpp"
#include "imbl/separable.hpp"
#include "imbl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace imbl;

namespace {

// One large training run shared by the distribution-matching cases below;
// built on first use. Scale chosen so the empirical logit distribution is
// close to its n -> infinity limit.
struct LargeRun {
  ModelParams params{0.15, 1.75, 2.5, 1.0};
  LabeledDataset data;
  TrainedClassifier clf;
  SeparableSolution sol;
  LimitLaws laws;

  LargeRun()
      : data(sample_gmm(params, 10000, 4000, 42)), clf(train_svm_hard(data, 1.0, {})),
        sol(solve_separable(params)), laws(limit_laws(sol, params)) {}
};

const LargeRun& large_run() {
  static LargeRun run;
  return run;
}

double min_margin(const LogitSample& s) {
  return *std::min_element(s.margins.begin(), s.margins.end());
}

}  // namespace

TEST_CASE("extract_eld computes logits and rebalanced margins exactly") {
  LabeledDataset data;
  data.features.resize(3, 2);
  data.features << 0.5, -2.0, -1.5, 3.0, 2.0, 0.25;
  data.labels.resize(3);
  data.labels << 1, -1, 1;
  data.n_plus = 2;
  data.n_minus = 1;
  data.mu = Eigen::VectorXd::Zero(2);

  TrainedClassifier clf;
  clf.beta = Eigen::VectorXd::Zero(2);
  clf.beta(0) = 1.0;
  clf.beta0 = 0.25;
  clf.tau = 2.0;

  LogitSample s = extract_eld(clf, data);
  REQUIRE(s.logits.size() == 3);
  CHECK(s.logits[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s.logits[1] == doctest::Approx(-1.25).epsilon(1e-15));
  CHECK(s.logits[2] == doctest::Approx(2.25).epsilon(1e-15));
  // class +1 margins divide by tau, class -1 margins flip sign only
  CHECK(s.margins[0] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(s.margins[1] == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(s.margins[2] == doctest::Approx(1.125).epsilon(1e-15));
  CHECK(s.labels == std::vector<int>{1, -1, 1});
  CHECK_FALSE(s.degenerate);

  clf.degenerate = true;
  CHECK(extract_eld(clf, data).degenerate);

  TrainedClassifier bad = clf;
  bad.beta = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(extract_eld(bad, data), std::invalid_argument);
}

TEST_CASE("minimum rebalanced margin equals the fitted margin kappa_hat") {
  ModelParams p{0.25, 1.75, 2.5, 1.0};
  LabeledDataset data = sample_gmm(p, 300, 120, 7);

  TrainedClassifier c1 = train_svm_hard(data, 1.0, {});
  REQUIRE(c1.separable);
  CHECK(min_margin(extract_eld(c1, data)) == doctest::Approx(c1.kappa_hat).epsilon(1e-8));

  TrainedClassifier c2 = train_svm_direct(data, 2.5, {});
  REQUIRE(c2.separable);
  CHECK(min_margin(extract_eld(c2, data)) == doctest::Approx(c2.kappa_hat).epsilon(1e-8));

  // post-hoc rebalancing preserves the attained-margin identity
  TrainedClassifier c3 = train_svm_hard(data, 2.5, {});
  REQUIRE(c3.separable);
  CHECK(min_margin(extract_eld(c3, data)) == doctest::Approx(c3.kappa_hat).epsilon(1e-8));
}

TEST_CASE("w2_1d: point masses, shifts, sampling rate") {
  CHECK_THROWS_AS(w2_1d({}, [](double) { return 0.0; }), std::invalid_argument);

  // point mass vs point mass: distance is the gap
  std::vector<double> flat(100, 1.5);
  CHECK(w2_1d(flat, [](double) { return -0.75; }) == doctest::Approx(2.25).epsilon(1e-12));

  Rng rng(314);
  auto gauss_sample = [&](std::size_t m, double shift) {
    std::vector<double> s(m);
    for (auto& x : s) x = rng.normal() + shift;
    return s;
  };
  auto std_q = [](double u) { return std_normal_quantile(u); };

  // self-distance at large m is small; a shift passes straight through
  CHECK(w2_1d(gauss_sample(100000, 0.0), std_q) <= 0.05);
  CHECK(w2_1d(gauss_sample(100000, 0.7), std_q) == doctest::Approx(0.7).epsilon(0.03));

  // decay rate of the self-distance: slope of log W2 vs log m near -1/2
  std::vector<double> logm, logw;
  for (std::size_t m : {1000, 10000, 100000}) {
    double acc = 0.0;
    for (int rep = 0; rep < 5; ++rep) acc += w2_1d(gauss_sample(m, 0.0), std_q);
    logm.push_back(std::log(static_cast<double>(m)));
    logw.push_back(std::log(acc / 5.0));
  }
  double mx = (logm[0] + logm[1] + logm[2]) / 3.0, my = (logw[0] + logw[1] + logw[2]) / 3.0;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    num += (logm[i] - mx) * (logw[i] - my);
    den += (logm[i] - mx) * (logm[i] - mx);
  }
  double slope = num / den;
  CHECK(slope < -0.3);
  CHECK(slope > -0.7);
}

TEST_CASE("per_class_eld_distance on samples drawn exactly from the laws") {
  const auto& R = large_run();
  Rng rng(99);
  LogitSample s;
  for (int i = 0; i < 10000; ++i) {
    bool plus = rng.uniform() < 0.5;
    const LimitLogitLaw& law = plus ? R.laws.eld_plus : R.laws.eld_minus;
    double u = std::min(std::max(rng.uniform(), 1e-12), 1.0 - 1e-12);
    s.labels.push_back(plus ? 1 : -1);
    s.logits.push_back(law.quantile(u));
    s.margins.push_back(0.0);  // unused here
  }
  auto [dp, dm] = per_class_eld_distance(s, R.laws.eld_plus, R.laws.eld_minus);
  CHECK(dp <= 0.1);
  CHECK(dm <= 0.1);

  LogitSample only_plus;
  only_plus.labels = {1, 1};
  only_plus.logits = {0.3, 0.4};
  only_plus.margins = {0.3, 0.4};
  CHECK_THROWS_AS(per_class_eld_distance(only_plus, R.laws.eld_plus, R.laws.eld_minus),
                  std::invalid_argument);
}

TEST_CASE("fit_rectified_gaussian recovers planted parameters") {
  Rng rng(2718);

  SUBCASE("plain Gaussian: loc matches the mean, no atom") {
    std::vector<double> s(100000);
    for (auto& x : s) x = rng.normal() + 0.8;
    RectifiedFit fit = fit_rectified_gaussian(s);
    CHECK_FALSE(fit.degenerate);
    CHECK(std::abs(fit.loc - 0.8) <= 4.0 / std::sqrt(100000.0));
    CHECK(fit.atom_mass <= 5.0 / 100000.0);
  }

  SUBCASE("clipped Gaussian: truncation point, atom mass, location") {
    const std::size_t m = 100000;  // the clip hides ~69% of the mass, so
                                   // the location estimate needs a big tail
    std::vector<double> s(m);
    for (auto& x : s) x = std::max(0.5, rng.normal());
    RectifiedFit fit = fit_rectified_gaussian(s);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.kappa == doctest::Approx(0.5).epsilon(1e-9));
    double atom_th = std_normal_cdf(0.5);
    double se = std::sqrt(atom_th * (1.0 - atom_th) / m);
    CHECK(std::abs(fit.atom_mass - atom_th) <= 3.0 * se);
    CHECK(std::abs(fit.loc - 0.0) <= 0.05);
  }

  SUBCASE("all-atom sample is degenerate") {
    std::vector<double> s(40, 1.25);
    RectifiedFit fit = fit_rectified_gaussian(s);
    CHECK(fit.degenerate);
    CHECK(fit.kappa == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(fit.atom_mass == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("too-small samples are rejected") {
    std::vector<double> s(29, 0.0);
    CHECK_THROWS_AS(fit_rectified_gaussian(s), std::invalid_argument);
  }
}

TEST_CASE("large-scale training margins match the limiting distribution") {
  const auto& R = large_run();
  REQUIRE(R.clf.separable);
  CHECK(std::abs(R.clf.kappa_hat - R.sol.kappa_star) <= 0.02);

  // support-vector fractions approach the limiting atom masses
  double svp = static_cast<double>(R.clf.support_plus.size()) / R.data.n_plus;
  double svm = static_cast<double>(R.clf.support_minus.size()) / R.data.n_minus;
  double atom_p = R.laws.eld_plus.atom_mass();
  double atom_m = R.laws.eld_minus.atom_mass();
  double se_p = std::sqrt(atom_p * (1.0 - atom_p) / R.data.n_plus);
  double se_m = std::sqrt(atom_m * (1.0 - atom_m) / R.data.n_minus);
  CHECK(std::abs(svp - atom_p) <= 3.0 * se_p);
  CHECK(std::abs(svm - atom_m) <= 3.0 * se_m);

  // class-conditional logit distributions converge in W2
  LogitSample eld = extract_eld(R.clf, R.data);
  auto [dp, dm] = per_class_eld_distance(eld, R.laws.eld_plus, R.laws.eld_minus);
  CHECK(dp <= 0.1);
  CHECK(dm <= 0.1);

  // rectified-Gaussian fit of the margin sample lands on (kappa*, loc*)
  std::vector<double> marg_p, marg_m;
  for (std::size_t i = 0; i < eld.labels.size(); ++i)
    (eld.labels[i] > 0 ? marg_p : marg_m).push_back(eld.margins[i]);
  RectifiedFit fp = fit_rectified_gaussian(marg_p);
  RectifiedFit fm = fit_rectified_gaussian(marg_m);
  double loc_p = R.sol.rho_star * R.params.mu_norm + R.sol.beta0_star;
  double loc_m = R.sol.rho_star * R.params.mu_norm - R.sol.beta0_star;
  CHECK(std::abs(fp.kappa - R.sol.kappa_star) <= 0.1);
  CHECK(std::abs(fm.kappa - R.sol.kappa_star) <= 0.1);
  CHECK(std::abs(fp.loc - loc_p) <= 0.1);
  CHECK(std::abs(fm.loc - loc_m) <= 0.1);

  // fresh test data: logits are Gaussian with the same centers
  LabeledDataset test = sample_gmm(R.params, 20000, 4000, 43);
  LogitSample tld = extract_eld(R.clf, test);
  tld.source = LogitSample::Source::test;
  auto [tp, tm] = per_class_eld_distance(tld, R.laws.tld_plus, R.laws.tld_minus);
  CHECK(tp <= 0.1);
  CHECK(tm <= 0.1);

  // clipping fresh test margins at kappa* transports them onto the ELD law
  std::vector<double> tmarg_p, tmarg_m;
  for (std::size_t i = 0; i < tld.labels.size(); ++i)
    (tld.labels[i] > 0 ? tmarg_p : tmarg_m).push_back(tld.margins[i]);
  CHECK(ot_truncation_check(tmarg_p, R.sol.kappa_star, R.laws.eld_plus) <= 0.1);
  CHECK(ot_truncation_check(tmarg_m, R.sol.kappa_star, R.laws.eld_minus) <= 0.1);
}

TEST_CASE("empirical-to-limit distance shrinks as the problem grows") {
  ModelParams p{0.15, 1.75, 2.5, 1.0};
  SeparableSolution sol = solve_separable(p);
  LimitLaws laws = limit_laws(sol, p);
  auto total_dist = [&](long n, long d, std::uint64_t seed) {
    LabeledDataset data = sample_gmm(p, n, d, seed);
    TrainedClassifier clf = train_svm_hard(data, 1.0, {});
    REQUIRE(clf.separable);
    auto [dp, dm] = per_class_eld_distance(extract_eld(clf, data), laws.eld_plus, laws.eld_minus);
    return 0.5 * (dp + dm);
  };
  int wins = 0;
  for (std::uint64_t rep = 0; rep < 10; ++rep)
    if (total_dist(1000, 400, 1000 + rep) < total_dist(500, 200, 2000 + rep)) ++wins;
  CHECK(wins >= 7);
}

TEST_CASE("ot_truncation_check certifies the clipping map and detects mistuning") {
  const auto& R = large_run();
  Rng rng(555);

  // margins of fresh test points in class +1 follow N(loc_p, 1)
  double loc_p = R.sol.rho_star * R.params.mu_norm + R.sol.beta0_star;
  std::vector<double> tld(100000);
  for (auto& x : tld) x = rng.normal() + loc_p;

  double matched = ot_truncation_check(tld, R.sol.kappa_star, R.laws.eld_plus);
  CHECK(matched <= 0.02);
  CHECK(ot_truncation_check(tld, R.sol.kappa_star + 0.3, R.laws.eld_plus) >= 2.0 * matched);
  CHECK(ot_truncation_check(tld, R.sol.kappa_star - 0.3, R.laws.eld_plus) >= 2.0 * matched);

  // a clip point below the whole sample makes the map the identity
  std::vector<double> small(tld.begin(), tld.begin() + 1000);
  LimitLogitLaw margin_law = R.laws.eld_plus.as_margin_law();
  double identity = ot_truncation_check(small, -100.0, R.laws.eld_plus);
  double direct = w2_1d(small, [&](double u) { return margin_law.quantile(u); });
  CHECK(identity == doctest::Approx(direct).epsilon(1e-15));

  CHECK_THROWS_AS(ot_truncation_check({}, 0.0, R.laws.eld_plus), std::invalid_argument);
}
