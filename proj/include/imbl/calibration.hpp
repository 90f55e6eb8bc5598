// Calibration metrics for the sigmoid plug-in probability estimate on the
// Gaussian mixture: asymptotic values by quadrature, empirical estimates
// via the closed-form posterior (the planted mean is known), and binned
// reliability diagrams with the exact binned Brier decomposition.
#pragma once

#include "imbl/gauss.hpp"
#include "imbl/separable.hpp"
#include "imbl/svm.hpp"

#include <optional>
#include <vector>

namespace imbl {

enum class CalibrationSource { asymptotic, empirical };

struct CalibrationReport {
  double mse = 0.0;          // E[(1{y=1} - p_hat)^2]
  double m_mse = 0.0;        // mse - pi(1-pi)
  double cal_err = 0.0;      // E[(p_hat - p_hat0)^2], p_hat0 = recalibrated
  double conf_err = 0.0;     // E[(p_hat - p_star)^2], p_star = posterior
  double v_y_given_x = 0.0;  // E[(1{y=1} - p_star)^2] (irreducible)
  CalibrationSource source = CalibrationSource::asymptotic;
  // Standard errors (empirical source only).
  std::optional<double> se_mse, se_cal_err, se_conf_err, se_v;
};

// Quadrature evaluation of the limiting metrics at a separable solution;
// all expectations over (Y, G) via expect_mixture.
CalibrationReport asymptotic_calibration(const SeparableSolution& sol, const ModelParams& params,
                                         const QuadratureRule& rule);

// Monte-Carlo metrics of clf on a test set, using the known planted mean
// for the exact posterior p_star and projection posterior p_hat0.
CalibrationReport empirical_calibration(const TrainedClassifier& clf, const LabeledDataset& test,
                                        const ModelParams& params);

struct ReliabilityBins {
  int M = 10;
  std::vector<long> count;    // per bin ((m-1)/M, m/M]
  std::vector<double> conf;   // mean predicted probability
  std::vector<double> acc;    // mean 1{y=1}
  double ece_like = 0.0;      // sum (|B_m|/n) (acc - conf)^2
  // Exact binned Brier decomposition:
  //   mse_binned = uncertainty - sharpness + cal_err_binned
  // where the binned predictor replaces p_hat by its bin mean.
  double mse_binned = 0.0, cal_err_binned = 0.0, sharpness = 0.0, uncertainty = 0.0;
};

ReliabilityBins reliability_bins(const TrainedClassifier& clf, const LabeledDataset& test, int M);

}  // namespace imbl
