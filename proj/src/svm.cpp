#include "imbl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace imbl {

namespace {

constexpr long kMaxActive = 8000;  // dense-Gram working-set ceiling

// LRU cache of Gram columns K(:,i) = X x_i; used by the separability
// phase and by the fallback solver.
class GramCache {
 public:
  GramCache(const MatrixRM& X, long capacity) : X_(X), cap_(std::max<long>(capacity, 2)) {}

  const Eigen::VectorXd& column(long i) {
    auto it = map_.find(i);
    if (it != map_.end()) {
      order_.splice(order_.begin(), order_, it->second.first);
      return it->second.second;
    }
    if (static_cast<long>(map_.size()) >= cap_) {
      map_.erase(order_.back());
      order_.pop_back();
    }
    order_.push_front(i);
    auto pos = map_.emplace(i, std::make_pair(order_.begin(),
                                              Eigen::VectorXd(X_ * X_.row(i).transpose())));
    return pos.first->second.second;
  }

 private:
  const MatrixRM& X_;
  long cap_;
  std::list<long> order_;
  std::unordered_map<long, std::pair<std::list<long>::iterator, Eigen::VectorXd>> map_;
};

TrainedClassifier empty_classifier(const LabeledDataset& data, double tau) {
  TrainedClassifier clf;
  clf.beta = Eigen::VectorXd::Zero(data.d());
  clf.tau = tau;
  clf.kind = ClassifierKind::svm;
  return clf;
}

void fill_rho(TrainedClassifier& clf, const LabeledDataset& data) {
  double mn = data.mu.norm(), bn = clf.beta.norm();
  clf.rho_hat = (mn > 0.0 && bn > 0.0) ? clf.beta.dot(data.mu) / (mn * bn) : 0.0;
}

// Separability phase: pairwise Frank-Wolfe on the closest pair of points
// between the class hulls. The hull distance Delta equals twice the tau=1
// geometric margin, so Delta < 2*kappa_min certifies non-separability,
// while the Frank-Wolfe gap bound Delta^2 >= |v|^2 - 2*gap certifies a
// usable margin. Runs in O(n) per step off the shared column cache. The
// final projections <x_i, v> double as a proximity score for seeding the
// main solver's working set.
enum class HullVerdict { separated, overlapping, undecided };

HullVerdict hull_separation(const LabeledDataset& data, const SvmOptions& opts, GramCache& cache,
                            Eigen::VectorXd& dots_out) {
  const long n = data.n();
  const double thresh2 = 4.0 * opts.kappa_min * opts.kappa_min;
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(n);
  for (long i = 0; i < n; ++i)
    lam(i) = data.labels(i) > 0 ? 1.0 / data.n_plus : 1.0 / data.n_minus;
  Eigen::VectorXd v =
      data.features.transpose() * (lam.array() * data.labels.cast<double>().array()).matrix();
  Eigen::VectorXd dots = data.features * v;  // <x_i, p - q>
  HullVerdict verdict = HullVerdict::undecided;

  for (long pass = 0; pass < opts.max_passes; ++pass) {
    double vp = 0.0, vq = 0.0;
    double minp = std::numeric_limits<double>::infinity();
    double maxm = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) {
      (data.labels(i) > 0 ? vp : vq) += lam(i) * dots(i);
      if (data.labels(i) > 0)
        minp = std::min(minp, dots(i));
      else
        maxm = std::max(maxm, dots(i));
    }
    double v2 = vp - vq;  // equals |v|^2 for class-wise unit weights
    if (v2 < thresh2) {
      verdict = HullVerdict::overlapping;
      break;
    }
    // separation along the current direction lower-bounds the hull distance
    if (minp - maxm > 2.0 * opts.kappa_min * std::sqrt(v2)) {
      verdict = HullVerdict::separated;
      break;
    }

    // per-class toward/away vertices
    long bp = -1, ap = -1, bm = -1, am = -1;
    for (long i = 0; i < n; ++i) {
      if (data.labels(i) > 0) {
        if (bp < 0 || dots(i) < dots(bp)) bp = i;
        if (lam(i) > 0.0 && (ap < 0 || dots(i) > dots(ap))) ap = i;
      } else {
        if (bm < 0 || dots(i) > dots(bm)) bm = i;
        if (lam(i) > 0.0 && (am < 0 || dots(i) < dots(am))) am = i;
      }
    }
    double gap_p = vp - dots(bp);
    double gap_m = dots(bm) - vq;
    if (v2 - 2.0 * (gap_p + gap_m) > thresh2) {
      verdict = HullVerdict::separated;
      break;
    }

    // pairwise step in the class with the larger gap: move mass gamma
    // from the away vertex a to the toward vertex b
    bool plus = gap_p >= gap_m;
    long b = plus ? bp : bm, a = plus ? ap : am;
    if (a == b) {  // both gaps vanish above the threshold: optimum reached
      verdict = HullVerdict::separated;
      break;
    }
    const Eigen::VectorXd& Kb = cache.column(b);
    const Eigen::VectorXd& Ka = cache.column(a);
    double dir2 = Kb(b) + Ka(a) - 2.0 * Kb(a);
    double sign = plus ? 1.0 : -1.0;
    double gamma = dir2 > 0.0 ? sign * (dots(a) - dots(b)) / dir2 : lam(a);
    gamma = std::clamp(gamma, 0.0, lam(a));
    if (gamma <= 0.0) {
      verdict = HullVerdict::separated;
      break;
    }
    lam(a) -= gamma;
    lam(b) += gamma;
    v += sign * gamma * (data.features.row(b) - data.features.row(a)).transpose();
    dots += sign * gamma * (Kb - Ka);
    if ((pass & 4095) == 4095) dots = data.features * v;  // drift control
  }
  dots_out = dots;
  return verdict;
}

struct SmoResult {
  Eigen::VectorXd alpha;   // length n
  double w0_scaled = 0.0;  // intercept of the unnormalized primal
  bool diverged = false;
};

// Fallback solver: SMO with maximal-violating-pair selection over all
// samples, gradients updated from LRU-cached Gram columns.
SmoResult smo_lru(const LabeledDataset& data, const Eigen::VectorXd& s, const SvmOptions& opts,
                  GramCache& cache) {
  const long n = data.n();
  const double dual_cap = 0.5 / (opts.kappa_min * opts.kappa_min);
  Eigen::VectorXd yd = data.labels.cast<double>();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = -s;
  SmoResult res;

  auto refresh_grad = [&]() {
    Eigen::VectorXd w = data.features.transpose() * alpha.cwiseProduct(yd);
    grad = (data.features * w).cwiseProduct(yd) - s;
  };

  for (long pass = 0; pass < opts.max_passes; ++pass) {
    double m = -std::numeric_limits<double>::infinity();
    double M = std::numeric_limits<double>::infinity();
    long i = -1, j = -1;
    for (long k = 0; k < n; ++k) {
      double val = -yd(k) * grad(k);
      if ((yd(k) > 0 || alpha(k) > 0.0) && val > m) {
        m = val;
        i = k;
      }
      if ((yd(k) < 0 || alpha(k) > 0.0) && val < M) {
        M = val;
        j = k;
      }
    }
    if (m - M <= opts.kkt_tol) {
      refresh_grad();  // recheck without incremental drift
      double m2 = -std::numeric_limits<double>::infinity();
      double M2 = std::numeric_limits<double>::infinity();
      for (long k = 0; k < n; ++k) {
        double val = -yd(k) * grad(k);
        if (yd(k) > 0 || alpha(k) > 0.0) m2 = std::max(m2, val);
        if (yd(k) < 0 || alpha(k) > 0.0) M2 = std::min(M2, val);
      }
      if (m2 - M2 <= 2.0 * opts.kkt_tol) {
        res.alpha = alpha;
        res.w0_scaled = 0.5 * (m2 + M2);
        return res;
      }
      continue;
    }

    const Eigen::VectorXd& Ki = cache.column(i);
    const Eigen::VectorXd& Kj = cache.column(j);
    double H = Ki(i) + Kj(j) - 2.0 * Ki(j);  // |x_i - x_j|^2
    double t = std::min((m - M) / std::max(H, 1e-300), 1e8);
    if (yd(i) < 0) t = std::min(t, alpha(i));
    if (yd(j) > 0) t = std::min(t, alpha(j));
    double ci = yd(i) * (yd(i) * t);   // y_i * da_i
    double cj = yd(j) * (-yd(j) * t);  // y_j * da_j
    alpha(i) = std::max(alpha(i) + yd(i) * t, 0.0);
    alpha(j) = std::max(alpha(j) - yd(j) * t, 0.0);
    for (long k = 0; k < n; ++k) grad(k) += yd(k) * (ci * Ki(k) + cj * Kj(k));

    // weak duality: dual value above 1/(2 kappa_min^2) certifies the
    // primal margin is below kappa_min
    if ((pass & 255) == 255 && 0.5 * alpha.dot(s - grad) > dual_cap) {
      res.diverged = true;
      return res;
    }
  }
  std::ostringstream msg;
  msg << "svm dual did not reach KKT tolerance " << opts.kkt_tol << " within " << opts.max_passes
      << " pair updates";
  throw std::runtime_error(msg.str());
}

// Main solver: exact active-set scheme. The inner SMO runs on a dense
// Gram over the working set; a full-gradient pass then either certifies
// the KKT conditions over all samples or pulls the worst violators into
// the set. Gram columns are built once per working-set member instead of
// once per cache miss, which dominates at large n x d.
class ActiveSetSolver {
 public:
  ActiveSetSolver(const LabeledDataset& data, const Eigen::VectorXd& s, const SvmOptions& opts)
      : data_(data), s_(s), opts_(opts), yd_(data.labels.cast<double>()),
        dual_cap_(0.5 / (opts.kappa_min * opts.kappa_min)), pos_(data.n(), -1),
        budget_(opts.max_passes) {}

  void seed(const Eigen::VectorXd& hull_dots) {
    std::vector<long> idx(data_.n());
    std::iota(idx.begin(), idx.end(), 0);
    // smaller y*<x,v> = deeper into the opposing class = likelier support
    std::sort(idx.begin(), idx.end(), [&](long a, long b) {
      return yd_(a) * hull_dots(a) < yd_(b) * hull_dots(b);
    });
    long quota_p = std::min<long>(data_.n_plus, std::max<long>(256, data_.n_plus / 3));
    long quota_m = std::min<long>(data_.n_minus, std::max<long>(256, data_.n_minus / 3));
    std::vector<long> take;
    for (long k : idx) {
      long& quota = yd_(k) > 0 ? quota_p : quota_m;
      if (quota > 0) {
        --quota;
        take.push_back(k);
      }
    }
    append(take);
  }

  // false = working set outgrew the dense ceiling; caller should fall back
  bool solve(SmoResult& res) {
    for (int round = 0; round < 200; ++round) {
      budget_ = opts_.max_passes;  // per-subproblem budget
      refresh_grad();
      InnerStatus st = inner_smo();
      if (st == InnerStatus::diverged) {
        res.diverged = true;
        return true;
      }

      // full KKT verification at the candidate active-set optimum
      Eigen::VectorXd w = Xa_.transpose() * alpha_.cwiseProduct(ya_);
      Eigen::VectorXd val =
          -((data_.features * w).cwiseProduct(yd_) - s_).cwiseProduct(yd_);
      double m = -std::numeric_limits<double>::infinity();
      double M = std::numeric_limits<double>::infinity();
      for (long k = 0; k < data_.n(); ++k) {
        double a = pos_[k] >= 0 ? alpha_(pos_[k]) : 0.0;
        if (yd_(k) > 0 || a > 0.0) m = std::max(m, val(k));
        if (yd_(k) < 0 || a > 0.0) M = std::min(M, val(k));
      }
      if (m - M <= 2.0 * opts_.kkt_tol) {
        res.alpha = Eigen::VectorXd::Zero(data_.n());
        for (long r = 0; r < nA(); ++r) res.alpha(active_[r]) = alpha_(r);
        res.w0_scaled = 0.5 * (m + M);
        return true;
      }

      // pull in the worst violators relative to the candidate intercept
      double b = 0.5 * (m + M);
      std::vector<std::pair<double, long>> scored;
      for (long k = 0; k < data_.n(); ++k) {
        if (pos_[k] >= 0) continue;
        double score = yd_(k) > 0 ? val(k) - b : b - val(k);
        if (score > 0.5 * opts_.kkt_tol) scored.emplace_back(score, k);
      }
      if (scored.empty()) {  // violation sits inside the set; accept as-is
        res.alpha = Eigen::VectorXd::Zero(data_.n());
        for (long r = 0; r < nA(); ++r) res.alpha(active_[r]) = alpha_(r);
        res.w0_scaled = b;
        return true;
      }
      long grow = std::min<long>(static_cast<long>(scored.size()), 512);
      if (nA() + grow > kMaxActive) return false;
      std::partial_sort(scored.begin(), scored.begin() + grow, scored.end(),
                        [](const auto& x, const auto& y) { return x.first > y.first; });
      std::vector<long> rows;
      for (long r = 0; r < grow; ++r) rows.push_back(scored[r].second);
      append(rows);
    }
    throw std::runtime_error("svm active-set solver failed to stabilize its working set");
  }

 private:
  enum class InnerStatus { converged, diverged };

  long nA() const { return static_cast<long>(active_.size()); }

  void append(const std::vector<long>& rows) {
    long old = nA(), add = static_cast<long>(rows.size());
    if (add == 0) return;
    Xa_.conservativeResize(old + add, data_.d());
    ya_.conservativeResize(old + add);
    sa_.conservativeResize(old + add);
    alpha_.conservativeResize(old + add);
    for (long r = 0; r < add; ++r) {
      long k = rows[r];
      pos_[k] = old + r;
      active_.push_back(k);
      Xa_.row(old + r) = data_.features.row(k);
      ya_(old + r) = yd_(k);
      sa_(old + r) = s_(k);
      alpha_(old + r) = 0.0;
    }
    G_.conservativeResize(old + add, old + add);
    if (old > 0) {
      G_.block(old, 0, add, old).noalias() = Xa_.bottomRows(add) * Xa_.topRows(old).transpose();
      G_.block(0, old, old, add) = G_.block(old, 0, add, old).transpose();
    }
    G_.block(old, old, add, add).noalias() =
        Xa_.bottomRows(add) * Xa_.bottomRows(add).transpose();
  }

  void refresh_grad() { grad_ = (G_ * alpha_.cwiseProduct(ya_)).cwiseProduct(ya_) - sa_; }

  InnerStatus inner_smo() {
    const long na = nA();
    while (budget_-- > 0) {
      double m = -std::numeric_limits<double>::infinity();
      double M = std::numeric_limits<double>::infinity();
      long i = -1, j = -1;
      for (long k = 0; k < na; ++k) {
        double val = -ya_(k) * grad_(k);
        if ((ya_(k) > 0 || alpha_(k) > 0.0) && val > m) {
          m = val;
          i = k;
        }
        if ((ya_(k) < 0 || alpha_(k) > 0.0) && val < M) {
          M = val;
          j = k;
        }
      }
      if (m - M <= opts_.kkt_tol) {
        refresh_grad();  // drift-free recheck
        double m2 = -std::numeric_limits<double>::infinity();
        double M2 = std::numeric_limits<double>::infinity();
        for (long k = 0; k < na; ++k) {
          double val = -ya_(k) * grad_(k);
          if (ya_(k) > 0 || alpha_(k) > 0.0) m2 = std::max(m2, val);
          if (ya_(k) < 0 || alpha_(k) > 0.0) M2 = std::min(M2, val);
        }
        if (m2 - M2 <= 2.0 * opts_.kkt_tol) return InnerStatus::converged;
        continue;
      }

      double H = G_(i, i) + G_(j, j) - 2.0 * G_(i, j);
      double t = std::min((m - M) / std::max(H, 1e-300), 1e8);
      if (ya_(i) < 0) t = std::min(t, alpha_(i));
      if (ya_(j) > 0) t = std::min(t, alpha_(j));
      double ci = ya_(i) * (ya_(i) * t);
      double cj = ya_(j) * (-ya_(j) * t);
      alpha_(i) = std::max(alpha_(i) + ya_(i) * t, 0.0);
      alpha_(j) = std::max(alpha_(j) - ya_(j) * t, 0.0);
      grad_ += (ci * G_.col(i) + cj * G_.col(j)).cwiseProduct(ya_);

      if ((budget_ & 255) == 0 && 0.5 * alpha_.dot(sa_ - grad_) > dual_cap_)
        return InnerStatus::diverged;
    }
    std::ostringstream msg;
    msg << "svm dual did not reach KKT tolerance " << opts_.kkt_tol << " within "
        << opts_.max_passes << " pair updates";
    throw std::runtime_error(msg.str());
  }

  const LabeledDataset& data_;
  const Eigen::VectorXd& s_;
  const SvmOptions& opts_;
  Eigen::VectorXd yd_;
  double dual_cap_;
  std::vector<long> active_;
  std::vector<long> pos_;
  MatrixRM Xa_;
  Eigen::VectorXd ya_, sa_, alpha_, grad_;
  Eigen::MatrixXd G_;
  long budget_;
};

TrainedClassifier solve_with_margins(const LabeledDataset& data, double s_plus, double s_minus,
                                     double tau_record, const SvmOptions& opts) {
  TrainedClassifier clf = empty_classifier(data, tau_record);
  if (data.degenerate()) {
    clf.degenerate = true;
    clf.beta0 = data.n_plus == 0 ? -1.0 : 1.0;
    return clf;
  }

  GramCache cache(data.features, opts.cache_columns);
  Eigen::VectorXd hull_dots;
  HullVerdict verdict = hull_separation(data, opts, cache, hull_dots);
  if (verdict == HullVerdict::undecided)
    throw std::runtime_error("svm separability phase exhausted its iteration budget");
  if (verdict == HullVerdict::overlapping) {
    clf.separable = false;
    return clf;
  }

  Eigen::VectorXd s(data.n());
  for (long k = 0; k < data.n(); ++k) s(k) = data.labels(k) > 0 ? s_plus : s_minus;
  SmoResult res;
  ActiveSetSolver solver(data, s, opts);
  solver.seed(hull_dots);
  if (!solver.solve(res)) res = smo_lru(data, s, opts, cache);
  if (res.diverged) {
    clf.separable = false;
    return clf;
  }

  Eigen::VectorXd w = data.features.transpose() *
                      res.alpha.cwiseProduct(data.labels.cast<double>());
  double wnorm = w.norm();
  if (!(wnorm > 0.0)) throw std::runtime_error("svm produced a zero normal vector");
  clf.beta = w / wnorm;
  clf.beta0 = res.w0_scaled / wnorm;
  clf.kappa_hat = 1.0 / wnorm;
  double amax = res.alpha.maxCoeff();
  for (long k = 0; k < data.n(); ++k)
    if (res.alpha(k) > 1e-9 * amax)
      (data.labels(k) > 0 ? clf.support_plus : clf.support_minus).push_back(k);
  fill_rho(clf, data);
  return clf;
}

}  // namespace

TrainedClassifier train_svm_hard(const LabeledDataset& data, double tau, const SvmOptions& opts) {
  if (!(tau > 0.0)) throw std::invalid_argument("train_svm_hard: tau must be positive");
  TrainedClassifier clf = solve_with_margins(data, 1.0, 1.0, tau, opts);
  if (clf.degenerate || !clf.separable) return clf;
  // exact post-hoc rebalancing of the tau=1 solution
  clf.beta0 += (tau - 1.0) / (tau + 1.0) * clf.kappa_hat;
  clf.kappa_hat = 2.0 * clf.kappa_hat / (tau + 1.0);
  return clf;
}

TrainedClassifier train_svm_direct(const LabeledDataset& data, double tau,
                                   const SvmOptions& opts) {
  if (!(tau > 0.0)) throw std::invalid_argument("train_svm_direct: tau must be positive");
  return solve_with_margins(data, tau, 1.0, tau, opts);
}

bool is_linearly_separable(const LabeledDataset& data, const SvmOptions& opts) {
  if (data.degenerate()) return true;
  GramCache cache(data.features, opts.cache_columns);
  Eigen::VectorXd dots;
  const HullVerdict verdict = hull_separation(data, opts, cache, dots);
  if (verdict == HullVerdict::undecided)
    throw std::runtime_error("separability certificate budget exhausted");
  return verdict == HullVerdict::separated;
}

}  // namespace imbl
