// Seed-reproducible samplers for the two-component (sub-)Gaussian mixture
// x = y*mu + z with mu = (|mu|, 0, ..., 0), plus the polynomially
// imbalanced parameterization pi = C_pi d^-a, |mu|^2 = C_mu d^b,
// n = C_n d^(c+1).
#pragma once

#include "imbl/separable.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <utility>

namespace imbl {

// Row-major so trainers stream sample-by-sample over contiguous memory.
using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Deterministic RNG owned by this library: mt19937_64 seeded through
// splitmix64, normals via polar Box-Muller. Outputs are reproducible
// across platforms for a fixed seed (no reliance on unspecified
// std::*_distribution algorithms).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();     // [0, 1)
  double normal();      // N(0, 1)
  int rademacher();     // +1 or -1
  double uniform_pm();  // U[-sqrt(3), sqrt(3)] (unit variance)

  // Stream for replicate k of a master seed; distinct k give
  // statistically independent streams.
  static std::uint64_t derive(std::uint64_t master_seed, std::uint64_t k);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct LabeledDataset {
  MatrixRM features;          // n x d
  Eigen::VectorXi labels;     // entries +1 / -1
  long n_plus = 0, n_minus = 0;
  Eigen::VectorXd mu;         // planted mean (length d)
  std::uint64_t seed = 0;

  long n() const { return features.rows(); }
  long d() const { return features.cols(); }
  bool degenerate() const { return n_plus == 0 || n_minus == 0; }
};

enum class NoiseKind { gaussian, rademacher, uniform };

LabeledDataset sample_gmm(const ModelParams& params, long n, long d, std::uint64_t seed);
LabeledDataset sample_subgmm(const ModelParams& params, long n, long d, std::uint64_t seed,
                             NoiseKind noise);

// Polynomial scalings pi = C_pi d^-a, |mu|^2 = C_mu d^b, n = C_n d^(c+1),
// tau_d = d^r. Requires a - c < 1 (positive-class count grows) and the
// derived pi in (0, 0.5].
struct HighImbConfig {
  double a = 0.3, b = 0.3, c = 0.1, r = 0.0;
  long d = 2000;
  double C_pi = 1.0, C_mu = 0.75, C_n = 1.0;

  double pi() const;
  double mu_norm() const;
  long n() const;
  double tau_d() const;
  void validate() const;  // throws std::invalid_argument
};

std::pair<LabeledDataset, double> high_imb_instance(const HighImbConfig& cfg, std::uint64_t seed,
                                                    NoiseKind noise = NoiseKind::gaussian);

// CSV dump (`y,x1..xd` header) with a JSON sidecar (pi, mu_norm, seed)
// written next to it at path + ".json".
void dump_dataset_csv(const LabeledDataset& ds, const ModelParams& params, const std::string& path);

}  // namespace imbl
