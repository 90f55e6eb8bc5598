// Tests for the RNG and mixture samplers: deterministic streams, moment
// oracles, KS goodness-of-fit, and the polynomially imbalanced scalings.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "imbl/dataset.hpp"
#include "imbl/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

using namespace imbl;

TEST_CASE("Rng: determinism, uniform range, normal and uniform_pm moments") {
  Rng a(12345), b(12345), c(54321);
  bool identical = true, differs = false;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t va = a.next_u64();
    identical = identical && (va == b.next_u64());
    differs = differs || (va != c.next_u64());
  }
  CHECK(identical);
  CHECK(differs);

  Rng r(7);
  const int n = 1'000'000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
  }
  // N(0,1) moments 0, 1, 0, 3 with MC error ~ sqrt(Var/n); 4-sigma bands
  CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(s3 / n) < 4.0 * std::sqrt(15.0 / n));
  CHECK(std::abs(s4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));

  double u1 = 0, u2 = 0, umin = 1e9, umax = -1e9;
  for (int i = 0; i < n; ++i) {
    double x = r.uniform();
    u1 += x;
    u2 += x * x;
    umin = std::min(umin, x);
    umax = std::max(umax, x);
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  CHECK(u1 / n == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(u2 / n == doctest::Approx(1.0 / 3.0).epsilon(3e-3));

  double p1 = 0, p2 = 0;
  int plus = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.uniform_pm();
    p1 += x;
    p2 += x * x;
    plus += r.rademacher() > 0 ? 1 : 0;
    CHECK(std::abs(x) <= std::sqrt(3.0));
  }
  CHECK(std::abs(p1 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(p2 / n == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(std::abs(static_cast<double>(plus) / n - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("Rng::derive: distinct replicate streams are decorrelated") {
  const int n = 100'000;
  std::uint64_t master = 99;
  CHECK(Rng::derive(master, 0) != Rng::derive(master, 1));
  CHECK(Rng::derive(master, 0) != Rng::derive(master + 1, 0));
  Rng r0(Rng::derive(master, 0)), r1(Rng::derive(master, 1)), r2(Rng::derive(master, 2));
  double c01 = 0, c12 = 0, c02 = 0;
  for (int i = 0; i < n; ++i) {
    double x = r0.normal(), y = r1.normal(), z = r2.normal();
    c01 += x * y;
    c12 += y * z;
    c02 += x * z;
  }
  double tol = 4.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(c01 / n) < tol);
  CHECK(std::abs(c12 / n) < tol);
  CHECK(std::abs(c02 / n) < tol);
}

TEST_CASE("sample_gmm: determinism, planted mean, isotropic noise") {
  ModelParams p{0.3, 1.75, 1.0, 1.0};
  const long n = 10'000, d = 50;
  LabeledDataset ds = sample_gmm(p, n, d, 2024);
  LabeledDataset ds2 = sample_gmm(p, n, d, 2024);
  CHECK(ds.features == ds2.features);
  CHECK(ds.labels == ds2.labels);
  CHECK(ds.n_plus + ds.n_minus == n);
  CHECK(ds.mu(0) == doctest::Approx(p.mu_norm));
  CHECK(ds.mu.tail(d - 1).norm() == 0.0);
  CHECK(!ds.degenerate());

  // label frequency ~ Bernoulli(pi)
  double frac = static_cast<double>(ds.n_plus) / n;
  CHECK(std::abs(frac - p.pi) < 4.0 * std::sqrt(p.pi * (1 - p.pi) / n));

  // class-conditional first-coordinate means at +-|mu| within 4/sqrt(n_class)
  double mp = 0, mm = 0;
  for (long i = 0; i < n; ++i)
    (ds.labels(i) > 0 ? mp : mm) += ds.features(i, 0);
  mp /= ds.n_plus;
  mm /= ds.n_minus;
  CHECK(std::abs(mp - p.mu_norm) < 4.0 / std::sqrt(static_cast<double>(ds.n_plus)));
  CHECK(std::abs(mm + p.mu_norm) < 4.0 / std::sqrt(static_cast<double>(ds.n_minus)));

  // noise block: unit variance along 20 random unit projections
  Rng proj(5);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd v(d - 1);
    for (long j = 0; j < d - 1; ++j) v(j) = proj.normal();
    v.normalize();
    Eigen::VectorXd z = ds.features.rightCols(d - 1) * v;
    double var = (z.array() - z.mean()).square().sum() / (n - 1);
    CHECK(std::abs(var - 1.0) <= 5.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("sample_subgmm: noise family contracts") {
  ModelParams p{0.5, 1.0, 1.0, 1.0};
  const long n = 2000, d = 40;

  LabeledDataset rad = sample_subgmm(p, n, d, 11, NoiseKind::rademacher);
  for (long i = 0; i < n; ++i)
    for (long j = 1; j < d; ++j)
      CHECK(std::abs(std::abs(rad.features(i, j)) - 1.0) == 0.0);

  LabeledDataset uni = sample_subgmm(p, n, d, 12, NoiseKind::uniform);
  double s2 = 0;
  long cnt = 0;
  for (long i = 0; i < n; ++i)
    for (long j = 1; j < d; ++j) {
      CHECK(std::abs(uni.features(i, j)) <= std::sqrt(3.0));
      s2 += uni.features(i, j) * uni.features(i, j);
      ++cnt;
    }
  CHECK(std::abs(s2 / cnt - 1.0) < 4.0 / std::sqrt(static_cast<double>(cnt)));

  // gaussian variant: KS test of a pure-noise coordinate against Phi
  LabeledDataset g = sample_subgmm(p, 10'000, 5, 13, NoiseKind::gaussian);
  std::vector<double> col(10'000);
  for (long i = 0; i < 10'000; ++i) col[i] = g.features(i, 2);
  std::sort(col.begin(), col.end());
  double ks = 0;
  for (std::size_t i = 0; i < col.size(); ++i) {
    double f = std_normal_cdf(col[i]);
    double lo = static_cast<double>(i) / col.size(), hi = static_cast<double>(i + 1) / col.size();
    ks = std::max({ks, std::abs(f - lo), std::abs(f - hi)});
  }
  CHECK(ks < 1.63 / std::sqrt(10'000.0));  // alpha = 0.01 critical value

  // identical seed and params: gaussian subgmm == gmm sampler exactly
  LabeledDataset g2 = sample_gmm(p, 100, 5, 13);
  LabeledDataset g3 = sample_subgmm(p, 100, 5, 13, NoiseKind::gaussian);
  CHECK(g2.features == g3.features);

  CHECK_THROWS_AS(sample_gmm(ModelParams{0.7, 1.0, 1.0, 1.0}, 10, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_gmm(p, 0, 2, 1), std::invalid_argument);
}

TEST_CASE("HighImbConfig: derived scalings, window arithmetic, config errors") {
  HighImbConfig cfg;  // a=0.3, b=0.3, c=0.1, d=2000, C = (1, 0.75, 1)
  cfg.validate();
  CHECK(cfg.pi() == doctest::Approx(std::pow(2000.0, -0.3)).epsilon(1e-12));
  CHECK(cfg.mu_norm() == doctest::Approx(std::sqrt(0.75 * std::pow(2000.0, 0.3))).epsilon(1e-12));
  CHECK(cfg.n() == std::lround(std::pow(2000.0, 1.1)));
  CHECK(cfg.tau_d() == 1.0);

  HighImbConfig win = cfg;
  win.a = 0.55;
  win.r = 0.19;
  // moderate-signal window: d^(a-b-c) < tau_d < d^((a-c)/2)
  CHECK(std::pow(2000.0, win.a - win.b - win.c) < win.tau_d());
  CHECK(win.tau_d() < std::pow(2000.0, (win.a - win.c) / 2.0));

  HighImbConfig bad = cfg;
  bad.a = 0.05;  // pi = 2000^-0.05 > 0.5
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  HighImbConfig rare = cfg;
  rare.a = 0.99;
  rare.c = 0.01;  // expected minority count = 2000^0.02 < 2
  CHECK_THROWS_AS(rare.validate(), std::invalid_argument);
  HighImbConfig shrinkn = cfg;
  shrinkn.a = 1.2;  // a - c >= 1
  CHECK_THROWS_AS(shrinkn.validate(), std::invalid_argument);

  auto [ds, tau] = high_imb_instance(cfg, 42);
  CHECK(tau == 1.0);
  CHECK(ds.n() == cfg.n());
  CHECK(ds.d() == cfg.d);
  CHECK(ds.mu(0) == doctest::Approx(cfg.mu_norm()));
  double frac = static_cast<double>(ds.n_plus) / ds.n();
  CHECK(std::abs(frac - cfg.pi()) < 4.0 * std::sqrt(cfg.pi() / ds.n()));
}

TEST_CASE("dump_dataset_csv: layout and sidecar round-trip") {
  ModelParams p{0.4, 2.0, 1.0, 1.0};
  LabeledDataset ds = sample_gmm(p, 7, 3, 5);
  std::string path = "/tmp/imbl_dataset_test.csv";
  dump_dataset_csv(ds, p, path);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "y,x1,x2,x3");
  long rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 7);

  std::ifstream side(path + ".json");
  REQUIRE(side.good());
  std::string blob((std::istreambuf_iterator<char>(side)), std::istreambuf_iterator<char>());
  CHECK(blob.find("\"pi\"") != std::string::npos);
  CHECK(blob.find("\"mu_norm\"") != std::string::npos);
  CHECK(blob.find("\"seed\"") != std::string::npos);
}
