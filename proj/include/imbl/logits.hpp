// Logit-distribution analytics: extracting empirical logit samples from a
// trained classifier, 1-D Wasserstein-2 distances against parametric
// quantile functions, rectified-Gaussian fitting, and the optimal-
// transport truncation-map check.
#pragma once

#include "imbl/separable.hpp"
#include "imbl/svm.hpp"

#include <functional>
#include <vector>

namespace imbl {

struct LogitSample {
  enum class Source { train, test };
  std::vector<int> labels;      // +1 / -1
  std::vector<double> logits;   // f(x_i)
  std::vector<double> margins;  // rebalanced margins y_i f(x_i) / s(y_i)
  Source source = Source::train;
  bool degenerate = false;
};

// Logits and rebalanced margins of `clf` on `data` (the empirical logit
// distribution when data is the training set).
LogitSample extract_eld(const TrainedClassifier& clf, const LabeledDataset& data);

// W2 distance of an empirical sample to the law with quantile function Q:
// sqrt( mean_k (x_(k) - Q((k - 1/2)/m))^2 ) over the sorted sample.
double w2_1d(std::vector<double> sample, const std::function<double(double)>& quantile_fn);

// Class-conditional W2 of the sample's logits against matching limiting
// laws; throws std::invalid_argument when a class is missing.
std::pair<double, double> per_class_eld_distance(const LogitSample& sample,
                                                 const LimitLogitLaw& law_plus,
                                                 const LimitLogitLaw& law_minus);

struct RectifiedFit {
  double kappa = 0.0;      // truncation point = sample minimum
  double loc = 0.0;        // mean of the Gaussian part (unit variance)
  double atom_mass = 0.0;  // fraction of the sample at the truncation
  bool degenerate = false; // all-atom sample, loc not identifiable
};

// Fits max{kappa, N(loc, 1)} to a margin sample: kappa = min, atom mass by
// counting within 1e-6 of it, loc by matching the mean above kappa to the
// truncated-normal conditional mean (1-D root solve).
RectifiedFit fit_rectified_gaussian(const std::vector<double>& margins);

// Pushes TLD margin samples through x -> max(kappa_star, x) and returns
// the W2 distance to the limiting ELD margin law; small values certify
// the truncation map as the transport from TLD to ELD.
double ot_truncation_check(const std::vector<double>& tld_margins, double kappa_star,
                           const LimitLogitLaw& eld_law);

}  // namespace imbl
