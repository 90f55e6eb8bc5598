#include "imbl/dataset.hpp"

#include "imbl/csvio.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace imbl {

namespace {

// splitmix64 finalizer: full-avalanche mix of a 64-bit word
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

std::uint64_t Rng::derive(std::uint64_t master_seed, std::uint64_t k) {
  // counter-based: two mixing rounds decorrelate nearby (master, k) pairs
  return mix64(master_seed ^ mix64(k + 0xD6E8FEB86659FD93ULL));
}

std::uint64_t Rng::next_u64() { return eng_(); }

double Rng::uniform() {
  // top 53 bits -> dyadic rational in [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

int Rng::rademacher() { return (next_u64() >> 63) ? 1 : -1; }

double Rng::uniform_pm() {
  static const double root3 = std::sqrt(3.0);
  return (2.0 * uniform() - 1.0) * root3;
}

LabeledDataset sample_subgmm(const ModelParams& params, long n, long d, std::uint64_t seed,
                             NoiseKind noise) {
  if (!(params.pi > 0.0) || params.pi > 0.5)
    throw std::invalid_argument("sample_subgmm: pi must lie in (0, 0.5]");
  if (!(params.mu_norm >= 0.0) || !std::isfinite(params.mu_norm))
    throw std::invalid_argument("sample_subgmm: mu_norm must be finite and nonnegative");
  if (n < 1 || d < 1) throw std::invalid_argument("sample_subgmm: n and d must be >= 1");

  Rng rng(seed);
  auto draw = [&]() -> double {
    switch (noise) {
      case NoiseKind::gaussian:
        return rng.normal();
      case NoiseKind::rademacher:
        return static_cast<double>(rng.rademacher());
      default:
        return rng.uniform_pm();
    }
  };

  LabeledDataset ds;
  ds.features.resize(n, d);
  ds.labels.resize(n);
  ds.mu = Eigen::VectorXd::Zero(d);
  ds.mu(0) = params.mu_norm;
  ds.seed = seed;
  for (long i = 0; i < n; ++i) {
    int y = rng.uniform() < params.pi ? 1 : -1;
    ds.labels(i) = y;
    (y > 0 ? ds.n_plus : ds.n_minus) += 1;
    for (long j = 0; j < d; ++j) ds.features(i, j) = draw();
    ds.features(i, 0) += y * params.mu_norm;  // x = y*mu + z with mu on axis 1
  }
  return ds;
}

LabeledDataset sample_gmm(const ModelParams& params, long n, long d, std::uint64_t seed) {
  return sample_subgmm(params, n, d, seed, NoiseKind::gaussian);
}

double HighImbConfig::pi() const { return C_pi * std::pow(static_cast<double>(d), -a); }

double HighImbConfig::mu_norm() const {
  return std::sqrt(C_mu * std::pow(static_cast<double>(d), b));
}

long HighImbConfig::n() const {
  return std::lround(C_n * std::pow(static_cast<double>(d), c + 1.0));
}

double HighImbConfig::tau_d() const { return std::pow(static_cast<double>(d), r); }

void HighImbConfig::validate() const {
  if (!(a > 0.0 && b > 0.0 && c > 0.0))
    throw std::invalid_argument("HighImbConfig: exponents a, b, c must be positive");
  if (r < 0.0) throw std::invalid_argument("HighImbConfig: r must be nonnegative");
  if (d < 1) throw std::invalid_argument("HighImbConfig: d must be positive");
  if (!(C_pi > 0.0 && C_mu > 0.0 && C_n > 0.0))
    throw std::invalid_argument("HighImbConfig: constants C_pi, C_mu, C_n must be positive");
  if (!(a - c < 1.0))
    throw std::invalid_argument("HighImbConfig: requires a - c < 1 so the minority count grows");
  double p = pi();
  if (p > 0.5) throw std::invalid_argument("HighImbConfig: derived pi exceeds 0.5");
  if (static_cast<double>(n()) * p < 2.0)
    throw std::invalid_argument("HighImbConfig: expected minority count below 2");
}

std::pair<LabeledDataset, double> high_imb_instance(const HighImbConfig& cfg, std::uint64_t seed,
                                                    NoiseKind noise) {
  cfg.validate();
  ModelParams p;
  p.pi = cfg.pi();
  p.mu_norm = cfg.mu_norm();
  p.delta = static_cast<double>(cfg.n()) / static_cast<double>(cfg.d);
  p.tau = cfg.tau_d();
  return {sample_subgmm(p, cfg.n(), cfg.d, seed, noise), cfg.tau_d()};
}

void dump_dataset_csv(const LabeledDataset& ds, const ModelParams& params,
                      const std::string& path) {
  CsvWriter w(path);
  std::vector<std::string> cells;
  cells.reserve(ds.d() + 1);
  cells.push_back("y");
  for (long j = 1; j <= ds.d(); ++j) cells.push_back("x" + std::to_string(j));
  w.row(cells);
  for (long i = 0; i < ds.n(); ++i) {
    cells.clear();
    cells.push_back(CsvWriter::num(static_cast<long>(ds.labels(i))));
    for (long j = 0; j < ds.d(); ++j) cells.push_back(CsvWriter::num(ds.features(i, j)));
    w.row(cells);
  }

  nlohmann::json meta{{"pi", params.pi},     {"mu_norm", params.mu_norm},
                      {"seed", ds.seed},     {"n", ds.n()},
                      {"d", ds.d()},         {"n_plus", ds.n_plus},
                      {"n_minus", ds.n_minus}};
  std::ofstream side(path + ".json");
  if (!side) throw std::runtime_error("dump_dataset_csv: cannot open " + path + ".json");
  side << meta.dump(2) << "\n";
}

}  // namespace imbl
