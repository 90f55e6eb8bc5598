// Polynomially imbalanced regime: the explicitly constructed near-optimal
// classifier and its margin upper bound (sandwiching the trained SVM
// margin), the signal-strength phase map in the exponents (a, b, c), and
// the replicate experiment driver.
#pragma once

#include "imbl/dataset.hpp"
#include "imbl/evaluate.hpp"

#include <vector>

namespace imbl {

struct ConstructedBound {
  double rho_tilde = 0.0;         // alignment of the constructed direction
  double beta0_tilde = 0.0;       // constructed intercept (tau = 1)
  double kappa_bar = 0.0;         // upper bound on the max margin
  double kappa_constructed = 0.0; // margin achieved by the construction
};

// Computes the class-mean noise decomposition and the closed-form bound;
// requires a two-class dataset with known planted mean.
ConstructedBound constructed_solution(const LabeledDataset& data);

enum class Phase { high_signal, moderate_signal, low_signal, boundary };

// Compares a - c against b and 2b: below b => high_signal (no rebalancing
// needed), between b and 2b => moderate_signal (rebalancing crucial),
// above 2b => low_signal (no better than chance). Within 1e-9 of an edge
// => boundary.
Phase phase_classify(const HighImbConfig& cfg);
const char* phase_name(Phase p);

struct PhaseRepResult {
  double err_plus = 0.0, err_minus = 0.0, err_balanced = 0.0;
  bool separable = true;
  bool degenerate = false;
  double kappa_hat = 0.0, kappa_bar = 0.0, kappa_constructed = 0.0;
};

// For each replicate: draw a high-imbalance instance, train the SVM at
// tau = d^r, evaluate on an independent balanced test set, and record the
// margin sandwich.
std::vector<PhaseRepResult> run_phase_experiment(const HighImbConfig& cfg, int reps,
                                                 std::uint64_t master_seed,
                                                 long test_per_class = 10000,
                                                 NoiseKind noise = NoiseKind::gaussian);

}  // namespace imbl
