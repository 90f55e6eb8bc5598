#include "imbl/experiments.hpp"

#include "imbl/separable.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace imbl {

namespace {

ReplicateResult run_one(const ReplicateSpec& spec, std::uint64_t seed) {
  ReplicateResult res;
  const ModelParams& p = spec.params;

  LabeledDataset train = sample_subgmm(p, spec.n, spec.d, seed, spec.noise);
  if (train.degenerate()) {
    res.degenerate = true;
    res.separable = false;
    return res;
  }

  TrainedClassifier clf;
  if (spec.kind == ClassifierKind::svm)
    clf = train_svm_hard(train, p.tau, {});
  else
    clf = train_logistic(train, p.tau, spec.ridge);

  res.separable = clf.separable;
  res.kappa_hat = clf.kappa_hat;
  res.rho_hat = clf.rho_hat;
  res.beta0_hat = clf.beta0;
  res.beta_norm = clf.beta.norm();

  if (spec.err_test_per_class > 0) {
    res.errors = evaluate_errors_streaming(clf, p, spec.err_test_per_class, spec.d,
                                           Rng::derive(seed, 1), spec.noise);
    res.has_errors = true;
  }

  if (spec.want_w2 && clf.separable && p.delta < delta_star(0.0, p)) {
    const SeparableSolution sol = solve_separable(p);
    const LimitLaws laws = limit_laws(sol, p);
    const LogitSample eld = extract_eld(clf, train);
    const auto [wp, wm] = per_class_eld_distance(eld, laws.eld_plus, laws.eld_minus);
    res.w2_plus = wp;
    res.w2_minus = wm;
    res.has_w2 = true;
  }

  if (spec.cal_test_n > 0) {
    LabeledDataset test = sample_subgmm(p, spec.cal_test_n, spec.d, Rng::derive(seed, 2),
                                        spec.noise);
    if (!test.degenerate()) {
      res.cal = empirical_calibration(clf, test, p);
      res.has_cal = true;
    }
  }
  return res;
}

}  // namespace

ReplicateResult run_replicate(const ReplicateSpec& spec, std::uint64_t seed) {
  try {
    return run_one(spec, seed);
  } catch (const std::exception& e) {
    ReplicateResult res;
    res.failed = true;
    res.separable = false;
    res.error = e.what();
    return res;
  }
}

std::vector<ReplicateResult> run_replicates(const ReplicateSpec& spec, int reps,
                                            std::uint64_t master_seed, int workers) {
  if (reps <= 0) return {};
  if (workers <= 0) workers = default_worker_count();
  workers = std::min<int>(workers, reps);

  std::vector<ReplicateResult> out(static_cast<std::size_t>(reps));
  if (workers <= 1) {
    for (int k = 0; k < reps; ++k)
      out[static_cast<std::size_t>(k)] =
          run_replicate(spec, Rng::derive(master_seed, static_cast<std::uint64_t>(k)));
    return out;
  }

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int k = w; k < reps; k += workers)
        out[static_cast<std::size_t>(k)] =
            run_replicate(spec, Rng::derive(master_seed, static_cast<std::uint64_t>(k)));
    });
  }
  for (std::thread& t : pool) t.join();
  return out;
}

int default_worker_count() {
  if (const char* env = std::getenv("IMBL_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc >= 1 ? static_cast<int>(hc) : 1;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = static_cast<long>(values.size());
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.se = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
  return s;
}

}  // namespace imbl
