#include "imbl/logits.hpp"

#include "imbl/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace imbl {

LogitSample extract_eld(const TrainedClassifier& clf, const LabeledDataset& data) {
  if (clf.beta.size() != data.d())
    throw std::invalid_argument("extract_eld: classifier dimension does not match data");
  LogitSample sample;
  sample.degenerate = clf.degenerate;
  const long n = data.n();
  sample.labels.resize(n);
  sample.logits.resize(n);
  sample.margins.resize(n);
  Eigen::VectorXd f = data.features * clf.beta;
  for (long i = 0; i < n; ++i) {
    int y = data.labels(i);
    double logit = f(i) + clf.beta0;
    sample.labels[i] = y;
    sample.logits[i] = logit;
    sample.margins[i] = y * logit / (y > 0 ? clf.tau : 1.0);
  }
  return sample;
}

double w2_1d(std::vector<double> sample, const std::function<double(double)>& quantile_fn) {
  if (sample.empty()) throw std::invalid_argument("w2_1d: empty sample");
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    double diff = sample[k] - quantile_fn((static_cast<double>(k) + 0.5) / m);
    acc += diff * diff;
  }
  return std::sqrt(acc / m);
}

std::pair<double, double> per_class_eld_distance(const LogitSample& sample,
                                                 const LimitLogitLaw& law_plus,
                                                 const LimitLogitLaw& law_minus) {
  std::vector<double> plus, minus;
  for (std::size_t i = 0; i < sample.labels.size(); ++i)
    (sample.labels[i] > 0 ? plus : minus).push_back(sample.logits[i]);
  if (plus.empty() || minus.empty())
    throw std::invalid_argument("per_class_eld_distance: a class is missing from the sample");
  double dp = w2_1d(std::move(plus), [&](double u) { return law_plus.quantile(u); });
  double dm = w2_1d(std::move(minus), [&](double u) { return law_minus.quantile(u); });
  return {dp, dm};
}

RectifiedFit fit_rectified_gaussian(const std::vector<double>& margins) {
  if (margins.size() < 30)
    throw std::invalid_argument("fit_rectified_gaussian: need at least 30 samples");
  RectifiedFit fit;
  fit.kappa = *std::min_element(margins.begin(), margins.end());

  double tail_sum = 0.0;
  long atom = 0, tail = 0;
  for (double x : margins) {
    if (x <= fit.kappa + 1e-6) {
      ++atom;
    } else {
      ++tail;
      tail_sum += x;
    }
  }
  fit.atom_mass = static_cast<double>(atom) / static_cast<double>(margins.size());
  if (tail == 0) {
    fit.degenerate = true;
    fit.loc = fit.kappa;
    return fit;
  }
  const double target = tail_sum / static_cast<double>(tail);  // > kappa

  // loc solves  loc + pdf(kappa - loc) / cdf(loc - kappa) = mean of the tail
  // (conditional mean of N(loc, 1) above kappa); strictly increasing in loc.
  auto cond_mean = [&](double loc) {
    double a = fit.kappa - loc;
    double denom = std_normal_cdf(-a);
    if (denom < 1e-300) return fit.kappa + 1.0 / std::max(a, 1.0);  // deep-tail asymptote
    return loc + std_normal_pdf(a) / denom;
  };
  double hi = target;  // cond_mean(target) > target
  double lo = target - 4.0;
  for (int grow = 0; grow < 60 && cond_mean(lo) > target; ++grow) lo -= (target - lo);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (cond_mean(mid) > target ? hi : lo) = mid;
    if (hi - lo < 1e-13 * (1.0 + std::abs(hi))) break;
  }
  fit.loc = 0.5 * (lo + hi);
  return fit;
}

double ot_truncation_check(const std::vector<double>& tld_margins, double kappa_star,
                           const LimitLogitLaw& eld_law) {
  if (tld_margins.empty()) throw std::invalid_argument("ot_truncation_check: empty sample");
  std::vector<double> pushed(tld_margins.size());
  for (std::size_t i = 0; i < tld_margins.size(); ++i)
    pushed[i] = std::max(kappa_star, tld_margins[i]);
  LimitLogitLaw margin_law = eld_law.as_margin_law();
  return w2_1d(std::move(pushed), [&](double u) { return margin_law.quantile(u); });
}

}  // namespace imbl
