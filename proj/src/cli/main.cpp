// Command-line front end: maps subcommands onto the library's solvers and
// replicate drivers, merges JSON config files with flag overrides, derives
// all randomness from one master seed, and emits CSV/JSON outputs plus a
// manifest that pins every input needed to reproduce a run bit-exactly.
#include <CLI11.hpp>
#include <json.hpp>

#include "imbl/calibration.hpp"
#include "imbl/csvio.hpp"
#include "imbl/dataset.hpp"
#include "imbl/evaluate.hpp"
#include "imbl/experiments.hpp"
#include "imbl/gauss.hpp"
#include "imbl/high_imbalance.hpp"
#include "imbl/logistic.hpp"
#include "imbl/logits.hpp"
#include "imbl/nonseparable.hpp"
#include "imbl/separable.hpp"
#include "imbl/svm.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace imbl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitPartial = 4;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Global options shared by every subcommand.
struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = default_worker_count()
  int quad_order = 200;
};

// Overrides `value` from the config file when the flag was not given on
// the command line (flags win over config, config wins over defaults).
template <typename T>
void cfg_override(const CLI::App* scope, const json& cfg, const std::string& flag,
                  const std::string& key, T& value) {
  if (scope->count(flag) == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

void write_manifest(const Common& com, const std::string& command, const json& resolved) {
  json tolerances{{"quad_order", com.quad_order},
                  {"svm_kkt_tol", SvmOptions{}.kkt_tol},
                  {"svm_max_passes", SvmOptions{}.max_passes},
                  {"logistic_grad_tol", LogisticOptions{}.grad_tol}};
  json manifest{{"schema", 1},
                {"command", command},
                {"config", resolved},
                {"master_seed", com.seed},
                {"workers", com.workers <= 0 ? default_worker_count() : com.workers},
                {"tolerances", tolerances},
                {"config_hash", hex64(fnv1a(resolved.dump()))}};
  fs::create_directories(com.out_dir);
  std::ofstream out(fs::path(com.out_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + com.out_dir);
  out << manifest.dump(2) << "\n";
}

std::string opt_cell(bool present, double v) { return present ? CsvWriter::num(v) : ""; }

// --- solve ----------------------------------------------------------------

struct SolveArgs {
  double pi = 0.15, mu = 1.0, delta = 1.0, tau = 1.0;
};

int cmd_solve(const Common& com, const SolveArgs& a) {
  ModelParams p{a.pi, a.mu, a.delta, a.tau};
  p.validate();

  json resolved{{"pi", p.pi}, {"mu_norm", p.mu_norm}, {"delta", p.delta}, {"tau", p.tau},
                {"quad_order", com.quad_order}};
  write_manifest(com, "solve", resolved);

  const double ds0 = delta_star(0.0, p);
  json rep{{"schema", 1},
           {"params", resolved},
           {"delta_star_0", ds0},
           {"regime", p.delta < ds0 ? "separable" : "non-separable"}};

  if (p.delta < ds0) {
    const SeparableSolution sol = solve_separable(p);
    rep["solution"] = {{"rho_star", sol.rho_star},
                       {"beta0_star", sol.beta0_star},
                       {"kappa_star", sol.kappa_star},
                       {"residuals", sol.residuals}};
    const TauOptResult to = tau_opt(p);
    rep["tau_opt"] = {{"tau", to.tau}, {"degenerate_denominator", to.degenerate_denominator}};
    const ErrorTriple err = asymptotic_errors(sol, p);
    rep["errors"] = {{"err_plus", err.err_plus},
                     {"err_minus", err.err_minus},
                     {"err_balanced", err.err_balanced}};
    const QuadratureRule rule = QuadratureRule::gauss_hermite(com.quad_order);
    const CalibrationReport cal = asymptotic_calibration(sol, p, rule);
    rep["calibration"] = {{"mse", cal.mse},
                          {"m_mse", cal.m_mse},
                          {"cal_err", cal.cal_err},
                          {"conf_err", cal.conf_err},
                          {"v_y_given_x", cal.v_y_given_x}};
  } else {
    const NonSepSolution sol = solve_nonseparable(p, com.quad_order);
    rep["solution"] = {{"rho_star", sol.rho_star},
                       {"R_star", sol.R_star},
                       {"beta0_star", sol.beta0_star},
                       {"lambda_star", sol.lambda_star},
                       {"residuals", sol.residuals}};
    const NonSepLimitLaws laws = limit_laws_nonsep(sol, p);
    const double ep = std_normal_cdf(-laws.plus.loc / laws.plus.scale);
    const double em = std_normal_cdf(-laws.minus.loc / laws.minus.scale);
    rep["errors"] = {{"err_plus", ep}, {"err_minus", em}, {"err_balanced", 0.5 * (ep + em)}};
  }

  fs::create_directories(com.out_dir);
  std::ofstream out(fs::path(com.out_dir) / "solve.json");
  out << rep.dump(2) << "\n";
  std::cout << rep.dump(2) << "\n";
  return kExitOk;
}

// --- simulate ---------------------------------------------------------------

struct SimArgs {
  double pi = 0.15, mu = 1.0, tau = 1.0;
  long n = 1000, d = 500;
  int reps = 10;
  std::string classifier = "svm";
  double ridge = 0.0;
  long err_test = 10000;  // per class, streaming; 0 skips
  long cal_test = 0;      // pi-imbalanced test size; 0 skips
  bool w2 = false;
};

int exit_code_for_failures(int failed, int total) {
  if (total == 0 || failed == 0) return kExitOk;
  return failed == total ? kExitSolver : kExitPartial;
}

int cmd_simulate(const Common& com, const SimArgs& a, const std::string& csv_name) {
  ReplicateSpec spec;
  spec.params = ModelParams{a.pi, a.mu, static_cast<double>(a.n) / static_cast<double>(a.d),
                            a.tau};
  spec.params.validate();
  if (a.classifier != "svm" && a.classifier != "logistic")
    throw std::invalid_argument("classifier must be 'svm' or 'logistic'");
  spec.n = a.n;
  spec.d = a.d;
  spec.kind = a.classifier == "svm" ? ClassifierKind::svm : ClassifierKind::logistic;
  spec.ridge = a.ridge;
  spec.err_test_per_class = a.err_test;
  spec.cal_test_n = a.cal_test;
  spec.want_w2 = a.w2;

  json resolved{{"pi", a.pi},     {"mu_norm", a.mu},           {"tau", a.tau},
                {"n", a.n},       {"d", a.d},                  {"reps", a.reps},
                {"classifier", a.classifier}, {"ridge", a.ridge},
                {"err_test_per_class", a.err_test}, {"cal_test_n", a.cal_test},
                {"w2", a.w2},     {"quad_order", com.quad_order}};
  write_manifest(com, "simulate", resolved);

  const auto results = run_replicates(spec, a.reps, com.seed, com.workers);

  fs::create_directories(com.out_dir);
  CsvWriter csv((fs::path(com.out_dir) / csv_name).string());
  csv.row({"row", "rep", "seed", "separable", "degenerate", "failed", "kappa_hat", "rho_hat",
           "beta0_hat", "beta_norm", "err_plus", "err_minus", "err_balanced", "w2_plus",
           "w2_minus", "mse", "cal_err", "conf_err", "v_y_given_x", "error"});

  std::vector<double> kh, rh, b0, ep, em, eb, wp, wm, mse, cal, conf, vy;
  int failed = 0;
  for (int k = 0; k < static_cast<int>(results.size()); ++k) {
    const ReplicateResult& r = results[static_cast<std::size_t>(k)];
    const std::uint64_t seed_k = Rng::derive(com.seed, static_cast<std::uint64_t>(k));
    if (r.failed) ++failed;
    if (!r.failed && !r.degenerate) {
      kh.push_back(r.kappa_hat);
      rh.push_back(r.rho_hat);
      b0.push_back(r.beta0_hat);
      if (r.has_errors) {
        ep.push_back(r.errors.err_plus);
        em.push_back(r.errors.err_minus);
        eb.push_back(r.errors.err_balanced);
      }
      if (r.has_w2) {
        wp.push_back(r.w2_plus);
        wm.push_back(r.w2_minus);
      }
      if (r.has_cal) {
        mse.push_back(r.cal.mse);
        cal.push_back(r.cal.cal_err);
        conf.push_back(r.cal.conf_err);
        vy.push_back(r.cal.v_y_given_x);
      }
    }
    csv.row({"rep", CsvWriter::num(k), std::to_string(seed_k),
             CsvWriter::num(static_cast<int>(r.separable)),
             CsvWriter::num(static_cast<int>(r.degenerate)),
             CsvWriter::num(static_cast<int>(r.failed)),
             opt_cell(!r.failed, r.kappa_hat), opt_cell(!r.failed, r.rho_hat),
             opt_cell(!r.failed, r.beta0_hat), opt_cell(!r.failed, r.beta_norm),
             opt_cell(r.has_errors, r.errors.err_plus), opt_cell(r.has_errors, r.errors.err_minus),
             opt_cell(r.has_errors, r.errors.err_balanced), opt_cell(r.has_w2, r.w2_plus),
             opt_cell(r.has_w2, r.w2_minus), opt_cell(r.has_cal, r.cal.mse),
             opt_cell(r.has_cal, r.cal.cal_err), opt_cell(r.has_cal, r.cal.conf_err),
             opt_cell(r.has_cal, r.cal.v_y_given_x), csv_escape(r.error)});
  }

  auto stat_row = [&](const char* name, bool want_se) {
    auto cell = [&](const std::vector<double>& v) {
      if (v.empty()) return std::string();
      const Summary s = summarize(v);
      return CsvWriter::num(want_se ? s.se : s.mean);
    };
    csv.row({name, "", "", "", "", "", cell(kh), cell(rh), cell(b0), "", cell(ep), cell(em),
             cell(eb), cell(wp), cell(wm), cell(mse), cell(cal), cell(conf), cell(vy), ""});
  };
  if (!results.empty()) {
    stat_row("mean", false);
    stat_row("se", true);
  }

  // Asymptotic targets at the same (pi, mu, delta, tau).
  const double ds0 = delta_star(0.0, spec.params);
  if (spec.params.delta < ds0) {
    const SeparableSolution sol = solve_separable(spec.params);
    const ErrorTriple err = asymptotic_errors(sol, spec.params);
    std::string cmse, ccal, cconf, cvy;
    if (a.cal_test > 0) {
      const CalibrationReport c =
          asymptotic_calibration(sol, spec.params, QuadratureRule::gauss_hermite(com.quad_order));
      cmse = CsvWriter::num(c.mse);
      ccal = CsvWriter::num(c.cal_err);
      cconf = CsvWriter::num(c.conf_err);
      cvy = CsvWriter::num(c.v_y_given_x);
    }
    csv.row({"limit", "", "", "", "", "", CsvWriter::num(sol.kappa_star),
             CsvWriter::num(sol.rho_star), CsvWriter::num(sol.beta0_star), "",
             CsvWriter::num(err.err_plus), CsvWriter::num(err.err_minus),
             CsvWriter::num(err.err_balanced), a.w2 ? "0" : "", a.w2 ? "0" : "", cmse, ccal,
             cconf, cvy, ""});
  } else {
    const NonSepSolution sol = solve_nonseparable(spec.params, com.quad_order);
    const NonSepLimitLaws laws = limit_laws_nonsep(sol, spec.params);
    const double lep = std_normal_cdf(-laws.plus.loc / laws.plus.scale);
    const double lem = std_normal_cdf(-laws.minus.loc / laws.minus.scale);
    csv.row({"limit", "", "", "", "", "", "", CsvWriter::num(sol.rho_star),
             CsvWriter::num(sol.beta0_star), CsvWriter::num(sol.R_star), CsvWriter::num(lep),
             CsvWriter::num(lem), CsvWriter::num(0.5 * (lep + lem)), "", "", "", "", "", "", ""});
  }

  std::cout << "simulate: " << results.size() << " replicates, " << failed << " failed; wrote "
            << (fs::path(com.out_dir) / csv_name).string() << "\n";
  return exit_code_for_failures(failed, static_cast<int>(results.size()));
}

// --- sweep-tau ----------------------------------------------------------------

struct SweepTauArgs {
  double pi = 0.05, mu = 1.0;
  long n = 100, d = 200;
  int reps = 100;
  long err_test = 10000;
  std::vector<double> grid;  // empty = auto geometric grid around tau_opt
};

int cmd_sweep_tau(const Common& com, const SweepTauArgs& a) {
  ModelParams base{a.pi, a.mu, static_cast<double>(a.n) / static_cast<double>(a.d), 1.0};
  base.validate();

  double center = 1.0;
  bool have_opt = false;
  double tau_opt_val = 0.0;
  if (base.delta < delta_star(0.0, base)) {
    const TauOptResult to = tau_opt(base);
    tau_opt_val = to.tau;
    if (!to.degenerate_denominator && to.tau > 0.0) {
      center = to.tau;
      have_opt = true;
    }
  }
  std::vector<double> grid = a.grid;
  if (grid.empty())
    for (int k = -4; k <= 4; ++k) grid.push_back(center * std::pow(2.0, 0.5 * k));

  json resolved{{"pi", a.pi}, {"mu_norm", a.mu}, {"n", a.n}, {"d", a.d}, {"reps", a.reps},
                {"err_test_per_class", a.err_test}, {"tau_grid", grid},
                {"quad_order", com.quad_order}};
  write_manifest(com, "sweep-tau", resolved);

  fs::create_directories(com.out_dir);
  CsvWriter csv((fs::path(com.out_dir) / "sweep_tau.csv").string());
  csv.row({"tau", "reps", "failures", "mean_err_plus", "se_err_plus", "mean_err_minus",
           "se_err_minus", "mean_err_b", "se_err_b", "limit_err_b", "at_tau_opt"});

  // Nearest grid point to the optimum, marked in the output.
  int opt_idx = -1;
  if (have_opt) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
      const double gap = std::abs(std::log(grid[static_cast<std::size_t>(i)] / center));
      if (gap < best) {
        best = gap;
        opt_idx = i;
      }
    }
  }

  int total_failed = 0, total_reps = 0;
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    const double tau = grid[static_cast<std::size_t>(i)];
    if (!(tau > 0.0)) throw std::invalid_argument("tau grid values must be positive");
    ReplicateSpec spec;
    spec.params = base;
    spec.params.tau = tau;
    spec.n = a.n;
    spec.d = a.d;
    spec.err_test_per_class = a.err_test;
    const auto results =
        run_replicates(spec, a.reps, Rng::derive(com.seed, static_cast<std::uint64_t>(i)),
                       com.workers);
    std::vector<double> ep, em, eb;
    int failed = 0;
    for (const ReplicateResult& r : results) {
      if (r.failed) {
        ++failed;
        continue;
      }
      if (r.has_errors) {
        ep.push_back(r.errors.err_plus);
        em.push_back(r.errors.err_minus);
        eb.push_back(r.errors.err_balanced);
      }
    }
    total_failed += failed;
    total_reps += static_cast<int>(results.size());

    std::string limit_eb;
    if (base.delta < delta_star(0.0, spec.params)) {
      const ErrorTriple err = asymptotic_errors(solve_separable(spec.params), spec.params);
      limit_eb = CsvWriter::num(err.err_balanced);
    }
    const Summary sp = summarize(ep), sm = summarize(em), sb = summarize(eb);
    csv.row({CsvWriter::num(tau), CsvWriter::num(static_cast<long>(results.size())),
             CsvWriter::num(failed), CsvWriter::num(sp.mean), CsvWriter::num(sp.se),
             CsvWriter::num(sm.mean), CsvWriter::num(sm.se), CsvWriter::num(sb.mean),
             CsvWriter::num(sb.se), limit_eb, i == opt_idx ? "1" : "0"});
  }

  std::cout << "sweep-tau: " << grid.size() << " cells x " << a.reps << " reps";
  if (have_opt) std::cout << ", tau_opt = " << center;
  else std::cout << ", tau_opt unusable (" << tau_opt_val << "), grid centered at 1";
  std::cout << "\n";
  return exit_code_for_failures(total_failed, total_reps);
}

// --- sweep-pi ----------------------------------------------------------------

struct SweepPiArgs {
  double mu = 1.0, tau = 1.0;
  long n = 1000, d = 500;
  int reps = 10;
  long err_test = 10000;
  bool use_tau_opt = false;
  std::vector<double> grid{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
};

int cmd_sweep_pi(const Common& com, const SweepPiArgs& a) {
  json resolved{{"mu_norm", a.mu}, {"tau", a.tau}, {"use_tau_opt", a.use_tau_opt},
                {"n", a.n}, {"d", a.d}, {"reps", a.reps},
                {"err_test_per_class", a.err_test}, {"pi_grid", a.grid},
                {"quad_order", com.quad_order}};
  write_manifest(com, "sweep-pi", resolved);

  fs::create_directories(com.out_dir);
  CsvWriter csv((fs::path(com.out_dir) / "sweep_pi.csv").string());
  csv.row({"pi", "tau_used", "tau_opt_degenerate", "reps", "failures", "mean_err_plus",
           "se_err_plus", "mean_err_minus", "se_err_minus", "mean_err_b", "se_err_b",
           "limit_err_plus", "limit_err_minus", "limit_err_b"});

  int total_failed = 0, total_reps = 0;
  for (int i = 0; i < static_cast<int>(a.grid.size()); ++i) {
    ModelParams p{a.grid[static_cast<std::size_t>(i)], a.mu,
                  static_cast<double>(a.n) / static_cast<double>(a.d), a.tau};
    p.validate();
    const bool separable_regime = p.delta < delta_star(0.0, p);
    bool degenerate_opt = false;
    if (a.use_tau_opt && separable_regime) {
      const TauOptResult to = tau_opt(p);
      if (!to.degenerate_denominator && to.tau > 0.0)
        p.tau = to.tau;
      else
        degenerate_opt = true;  // keep the configured tau
    }

    ReplicateSpec spec;
    spec.params = p;
    spec.n = a.n;
    spec.d = a.d;
    spec.err_test_per_class = a.err_test;
    const auto results =
        run_replicates(spec, a.reps, Rng::derive(com.seed, static_cast<std::uint64_t>(i)),
                       com.workers);
    std::vector<double> ep, em, eb;
    int failed = 0;
    for (const ReplicateResult& r : results) {
      if (r.failed) {
        ++failed;
        continue;
      }
      if (r.has_errors) {
        ep.push_back(r.errors.err_plus);
        em.push_back(r.errors.err_minus);
        eb.push_back(r.errors.err_balanced);
      }
    }
    total_failed += failed;
    total_reps += static_cast<int>(results.size());

    std::string lp, lm, lb;
    if (separable_regime) {
      const ErrorTriple err = asymptotic_errors(solve_separable(p), p);
      lp = CsvWriter::num(err.err_plus);
      lm = CsvWriter::num(err.err_minus);
      lb = CsvWriter::num(err.err_balanced);
    }
    const Summary sp = summarize(ep), sm = summarize(em), sb = summarize(eb);
    csv.row({CsvWriter::num(p.pi), CsvWriter::num(p.tau),
             CsvWriter::num(static_cast<int>(degenerate_opt)),
             CsvWriter::num(static_cast<long>(results.size())), CsvWriter::num(failed),
             CsvWriter::num(sp.mean), CsvWriter::num(sp.se), CsvWriter::num(sm.mean),
             CsvWriter::num(sm.se), CsvWriter::num(sb.mean), CsvWriter::num(sb.se), lp, lm, lb});
  }
  std::cout << "sweep-pi: " << a.grid.size() << " cells x " << a.reps << " reps\n";
  return exit_code_for_failures(total_failed, total_reps);
}

// --- phase ----------------------------------------------------------------

struct PhaseArgs {
  std::vector<double> a_grid{0.3, 0.55, 0.8};
  std::vector<double> r_grid{0.0, 0.19};
  double b = 0.3, c = 0.1;
  long d = 2000;
  double c_pi = 1.0, c_mu = 0.75, c_n = 1.0;
  int reps = 10;
  long test_per_class = 10000;
  std::string noise = "gaussian";
};

NoiseKind parse_noise(const std::string& s) {
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "rademacher") return NoiseKind::rademacher;
  if (s == "uniform") return NoiseKind::uniform;
  throw std::invalid_argument("noise must be gaussian, rademacher or uniform");
}

int cmd_phase(const Common& com, const PhaseArgs& a) {
  const NoiseKind noise = parse_noise(a.noise);
  json resolved{{"a_grid", a.a_grid}, {"r_grid", a.r_grid}, {"b", a.b}, {"c", a.c},
                {"d", a.d}, {"C_pi", a.c_pi}, {"C_mu", a.c_mu}, {"C_n", a.c_n},
                {"reps", a.reps}, {"test_per_class", a.test_per_class}, {"noise", a.noise}};
  write_manifest(com, "phase", resolved);

  fs::create_directories(com.out_dir);
  CsvWriter csv((fs::path(com.out_dir) / "phase.csv").string());
  csv.row({"a", "r", "rep", "err_plus", "err_minus", "err_b", "separable"});
  CsvWriter sum((fs::path(com.out_dir) / "phase_summary.csv").string());
  sum.row({"a", "r", "phase", "reps", "degenerate", "mean_err_plus", "mean_err_minus",
           "mean_err_b", "n_separable", "sandwich_ok"});

  int cell = 0;
  for (double av : a.a_grid) {
    for (double rv : a.r_grid) {
      HighImbConfig cfg;
      cfg.a = av;
      cfg.b = a.b;
      cfg.c = a.c;
      cfg.r = rv;
      cfg.d = a.d;
      cfg.C_pi = a.c_pi;
      cfg.C_mu = a.c_mu;
      cfg.C_n = a.c_n;
      const Phase phase = phase_classify(cfg);
      const auto results = run_phase_experiment(
          cfg, a.reps, Rng::derive(com.seed, static_cast<std::uint64_t>(cell)),
          a.test_per_class, noise);

      double mp = 0, mm = 0, mb = 0;
      int live = 0, deg = 0, nsep = 0, sandwich = 0;
      for (int k = 0; k < static_cast<int>(results.size()); ++k) {
        const PhaseRepResult& r = results[static_cast<std::size_t>(k)];
        if (r.degenerate) {
          ++deg;
          continue;
        }
        ++live;
        mp += r.err_plus;
        mm += r.err_minus;
        mb += r.err_balanced;
        nsep += r.separable ? 1 : 0;
        sandwich += (r.kappa_constructed <= r.kappa_hat + 1e-12 &&
                     r.kappa_hat <= r.kappa_bar + 1e-8)
                        ? 1
                        : 0;
        csv.row({CsvWriter::num(av), CsvWriter::num(rv), CsvWriter::num(k),
                 CsvWriter::num(r.err_plus), CsvWriter::num(r.err_minus),
                 CsvWriter::num(r.err_balanced), CsvWriter::num(static_cast<int>(r.separable))});
      }
      sum.row({CsvWriter::num(av), CsvWriter::num(rv), phase_name(phase),
               CsvWriter::num(live), CsvWriter::num(deg),
               live ? CsvWriter::num(mp / live) : "", live ? CsvWriter::num(mm / live) : "",
               live ? CsvWriter::num(mb / live) : "", CsvWriter::num(nsep),
               CsvWriter::num(sandwich)});
      ++cell;
    }
  }
  std::cout << "phase: " << cell << " cells x " << a.reps << " reps\n";
  return kExitOk;
}

// --- calibrate ----------------------------------------------------------------

struct CalArgs {
  double pi = 0.25, mu = 1.0, tau = 1.0;
  long n = 1000, d = 500;
  int reps = 10;
  long cal_test = 10000;
  int bins = 10;
};

int cmd_calibrate(const Common& com, const CalArgs& a) {
  ModelParams p{a.pi, a.mu, static_cast<double>(a.n) / static_cast<double>(a.d), a.tau};
  p.validate();
  if (a.bins < 2) throw std::invalid_argument("bins must be at least 2");

  json resolved{{"pi", a.pi}, {"mu_norm", a.mu}, {"tau", a.tau}, {"n", a.n}, {"d", a.d},
                {"reps", a.reps}, {"cal_test_n", a.cal_test}, {"bins", a.bins},
                {"quad_order", com.quad_order}};
  write_manifest(com, "calibrate", resolved);

  fs::create_directories(com.out_dir);
  CsvWriter csv((fs::path(com.out_dir) / "calibrate.csv").string());
  csv.row({"row", "rep", "mse", "cal_err", "conf_err", "v_y_given_x", "ece_like", "mse_binned",
           "sharpness", "uncertainty"});

  std::vector<double> mse, cal, conf, vy, ece;
  std::vector<long> bin_count(static_cast<std::size_t>(a.bins), 0);
  std::vector<double> bin_conf(static_cast<std::size_t>(a.bins), 0.0);
  std::vector<double> bin_acc(static_cast<std::size_t>(a.bins), 0.0);
  int failed = 0;
  for (int k = 0; k < a.reps; ++k) {
    const std::uint64_t seed_k = Rng::derive(com.seed, static_cast<std::uint64_t>(k));
    try {
      LabeledDataset train = sample_gmm(p, a.n, a.d, seed_k);
      TrainedClassifier clf = train_svm_hard(train, p.tau, {});
      LabeledDataset test = sample_gmm(p, a.cal_test, a.d, Rng::derive(seed_k, 1));
      const CalibrationReport rep = empirical_calibration(clf, test, p);
      const ReliabilityBins bins = reliability_bins(clf, test, a.bins);
      mse.push_back(rep.mse);
      cal.push_back(rep.cal_err);
      conf.push_back(rep.conf_err);
      vy.push_back(rep.v_y_given_x);
      ece.push_back(bins.ece_like);
      for (int b = 0; b < a.bins; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        bin_count[bi] += bins.count[bi];
        bin_conf[bi] += bins.conf[bi] * static_cast<double>(bins.count[bi]);
        bin_acc[bi] += bins.acc[bi] * static_cast<double>(bins.count[bi]);
      }
      csv.row({"rep", CsvWriter::num(k), CsvWriter::num(rep.mse), CsvWriter::num(rep.cal_err),
               CsvWriter::num(rep.conf_err), CsvWriter::num(rep.v_y_given_x),
               CsvWriter::num(bins.ece_like), CsvWriter::num(bins.mse_binned),
               CsvWriter::num(bins.sharpness), CsvWriter::num(bins.uncertainty)});
    } catch (const std::exception& e) {
      ++failed;
      csv.row({"rep", CsvWriter::num(k), "", "", "", "", "", "", "", csv_escape(e.what())});
    }
  }

  auto stat_row = [&](const char* name, bool want_se) {
    auto cell = [&](const std::vector<double>& v) {
      if (v.empty()) return std::string();
      const Summary s = summarize(v);
      return CsvWriter::num(want_se ? s.se : s.mean);
    };
    csv.row({name, "", cell(mse), cell(cal), cell(conf), cell(vy), cell(ece), "", "", ""});
  };
  stat_row("mean", false);
  stat_row("se", true);

  if (p.delta < delta_star(0.0, p)) {
    const CalibrationReport lim = asymptotic_calibration(
        solve_separable(p), p, QuadratureRule::gauss_hermite(com.quad_order));
    csv.row({"limit", "", CsvWriter::num(lim.mse), CsvWriter::num(lim.cal_err),
             CsvWriter::num(lim.conf_err), CsvWriter::num(lim.v_y_given_x), "", "", "", ""});
  }

  CsvWriter bcsv((fs::path(com.out_dir) / "calibrate_bins.csv").string());
  bcsv.row({"bin", "lo", "hi", "count", "conf", "acc"});
  for (int b = 0; b < a.bins; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    const double lo = static_cast<double>(b) / a.bins;
    const double hi = static_cast<double>(b + 1) / a.bins;
    const long cnt = bin_count[bi];
    bcsv.row({CsvWriter::num(b), CsvWriter::num(lo), CsvWriter::num(hi), CsvWriter::num(cnt),
              cnt ? CsvWriter::num(bin_conf[bi] / static_cast<double>(cnt)) : "",
              cnt ? CsvWriter::num(bin_acc[bi] / static_cast<double>(cnt)) : ""});
  }

  std::cout << "calibrate: " << a.reps << " replicates, " << failed << " failed\n";
  return exit_code_for_failures(failed, a.reps);
}

// --- proxplot ----------------------------------------------------------------

struct ProxArgs {
  std::vector<double> lambdas{1.0, 5.0, 100.0, 10000.0};
  double x_min = -20.0, x_max = 20.0;
  int points = 401;
};

int cmd_proxplot(const Common& com, const ProxArgs& a) {
  if (a.points < 2) throw std::invalid_argument("points must be at least 2");
  for (double lam : a.lambdas)
    if (!(lam > 0.0)) throw std::invalid_argument("lambda values must be positive");

  json resolved{{"lambdas", a.lambdas}, {"x_min", a.x_min}, {"x_max", a.x_max},
                {"points", a.points}};
  write_manifest(com, "proxplot", resolved);

  fs::create_directories(com.out_dir);
  CsvWriter csv((fs::path(com.out_dir) / "proxplot.csv").string());
  std::vector<std::string> header{"x"};
  for (double lam : a.lambdas) header.push_back("prox_" + CsvWriter::num(lam));
  csv.row(header);
  for (int i = 0; i < a.points; ++i) {
    const double x = a.x_min + (a.x_max - a.x_min) * i / (a.points - 1);
    std::vector<std::string> cells{CsvWriter::num(x)};
    for (double lam : a.lambdas) cells.push_back(CsvWriter::num(prox_logistic(x, lam)));
    csv.row(cells);
  }
  std::cout << "proxplot: " << a.points << " points x " << a.lambdas.size() << " lambdas\n";
  return kExitOk;
}

// --- dump-data ----------------------------------------------------------------

struct DumpArgs {
  double pi = 0.15, mu = 1.0, tau = 1.0;
  long n = 1000, d = 500;
  std::string name = "data.csv";
};

int cmd_dump(const Common& com, const DumpArgs& a) {
  ModelParams p{a.pi, a.mu, static_cast<double>(a.n) / static_cast<double>(a.d), a.tau};
  p.validate();
  json resolved{{"pi", a.pi}, {"mu_norm", a.mu}, {"tau", a.tau}, {"n", a.n}, {"d", a.d},
                {"file", a.name}};
  write_manifest(com, "dump-data", resolved);

  LabeledDataset ds = sample_gmm(p, a.n, a.d, com.seed);
  fs::create_directories(com.out_dir);
  const std::string path = (fs::path(com.out_dir) / a.name).string();
  dump_dataset_csv(ds, p, path);
  std::cout << "dump-data: wrote " << path << " (+ sidecar)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotics and finite-sample simulation of margin-rebalanced linear "
               "classifiers on imbalanced Gaussian mixtures"};
  app.require_subcommand(1);
  app.fallthrough(true);

  Common com;
  app.add_option("--config", com.config_path, "JSON config file (flags override its keys)");
  app.add_option("--out", com.out_dir, "output directory (created if missing)");
  app.add_option("--seed", com.seed, "master seed; all replicate seeds derive from it");
  app.add_option("--workers", com.workers, "worker threads (default: IMBL_WORKERS or cores)");
  app.add_option("--quad-order", com.quad_order, "Gauss-Hermite order for limit integrals")
      ->check(CLI::PositiveNumber);

  CLI::App* solve = app.add_subcommand("solve", "asymptotic solution at one parameter point");
  SolveArgs sa;
  solve->add_option("--pi", sa.pi, "positive-class probability");
  solve->add_option("--mu", sa.mu, "mean separation |mu|");
  solve->add_option("--delta", sa.delta, "aspect ratio n/d");
  solve->add_option("--tau", sa.tau, "margin rebalancing ratio");

  CLI::App* sim = app.add_subcommand("simulate", "replicated sample/train/evaluate runs");
  SimArgs ma;
  sim->add_option("--pi", ma.pi, "positive-class probability");
  sim->add_option("--mu", ma.mu, "mean separation |mu|");
  sim->add_option("--tau", ma.tau, "margin rebalancing ratio");
  sim->add_option("--n", ma.n, "training sample size");
  sim->add_option("--d", ma.d, "dimension");
  sim->add_option("--reps", ma.reps, "replicate count");
  sim->add_option("--classifier", ma.classifier, "svm or logistic");
  sim->add_option("--ridge", ma.ridge, "ridge penalty (logistic only)");
  sim->add_option("--err-test", ma.err_test, "balanced test points per class (0 = skip)");
  sim->add_option("--cal-test", ma.cal_test, "calibration test size (0 = skip)");
  sim->add_flag("--w2", ma.w2, "per-class W2 of training logits vs the limit law");

  CLI::App* st = app.add_subcommand("sweep-tau", "balanced error across a tau grid");
  SweepTauArgs ta;
  st->add_option("--pi", ta.pi, "positive-class probability");
  st->add_option("--mu", ta.mu, "mean separation |mu|");
  st->add_option("--n", ta.n, "training sample size");
  st->add_option("--d", ta.d, "dimension");
  st->add_option("--reps", ta.reps, "replicates per grid point");
  st->add_option("--err-test", ta.err_test, "balanced test points per class");
  st->add_option("--tau-grid", ta.grid, "explicit tau values")->delimiter(',');

  CLI::App* sp = app.add_subcommand("sweep-pi", "errors across an imbalance grid");
  SweepPiArgs pa;
  sp->add_option("--mu", pa.mu, "mean separation |mu|");
  sp->add_option("--tau", pa.tau, "rebalancing ratio (when not using --use-tau-opt)");
  sp->add_option("--n", pa.n, "training sample size");
  sp->add_option("--d", pa.d, "dimension");
  sp->add_option("--reps", pa.reps, "replicates per grid point");
  sp->add_option("--err-test", pa.err_test, "balanced test points per class");
  sp->add_option("--pi-grid", pa.grid, "pi values")->delimiter(',');
  sp->add_flag("--use-tau-opt", pa.use_tau_opt,
               "rebalance each cell at its optimal ratio when it exists");

  CLI::App* ph = app.add_subcommand("phase", "high-imbalance (a, r) heatmap data");
  PhaseArgs ha;
  ph->add_option("--a-grid", ha.a_grid, "imbalance exponents")->delimiter(',');
  ph->add_option("--r-grid", ha.r_grid, "tau = d^r exponents")->delimiter(',');
  ph->add_option("--b", ha.b, "signal exponent");
  ph->add_option("--c", ha.c, "sample-size exponent");
  ph->add_option("--d", ha.d, "dimension");
  ph->add_option("--C-pi", ha.c_pi, "constant in pi = C_pi d^-a");
  ph->add_option("--C-mu", ha.c_mu, "constant in |mu|^2 = C_mu d^b");
  ph->add_option("--C-n", ha.c_n, "constant in n = C_n d^(c+1)");
  ph->add_option("--reps", ha.reps, "replicates per cell");
  ph->add_option("--test-per-class", ha.test_per_class, "balanced test points per class");
  ph->add_option("--noise", ha.noise, "gaussian, rademacher or uniform");

  CLI::App* ca = app.add_subcommand("calibrate", "empirical vs limiting calibration metrics");
  CalArgs caa;
  ca->add_option("--pi", caa.pi, "positive-class probability");
  ca->add_option("--mu", caa.mu, "mean separation |mu|");
  ca->add_option("--tau", caa.tau, "margin rebalancing ratio");
  ca->add_option("--n", caa.n, "training sample size");
  ca->add_option("--d", caa.d, "dimension");
  ca->add_option("--reps", caa.reps, "replicate count");
  ca->add_option("--cal-test", caa.cal_test, "test set size per replicate");
  ca->add_option("--bins", caa.bins, "reliability bins");

  CLI::App* px = app.add_subcommand("proxplot", "proximal map curves of the logistic loss");
  ProxArgs pxa;
  px->add_option("--lambdas", pxa.lambdas, "lambda values")->delimiter(',');
  px->add_option("--x-min", pxa.x_min, "left end of the x range");
  px->add_option("--x-max", pxa.x_max, "right end of the x range");
  px->add_option("--points", pxa.points, "sample count");

  CLI::App* dd = app.add_subcommand("dump-data", "write one sampled dataset as CSV");
  DumpArgs da;
  dd->add_option("--pi", da.pi, "positive-class probability");
  dd->add_option("--mu", da.mu, "mean separation |mu|");
  dd->add_option("--tau", da.tau, "margin rebalancing ratio (recorded only)");
  dd->add_option("--n", da.n, "sample size");
  dd->add_option("--d", da.d, "dimension");
  dd->add_option("--file", da.name, "output file name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    json cfg;
    if (!com.config_path.empty()) {
      std::ifstream in(com.config_path);
      if (!in) throw std::invalid_argument("config file not readable: " + com.config_path);
      in >> cfg;
    }
    cfg_override(&app, cfg, "--out", "out", com.out_dir);
    cfg_override(&app, cfg, "--seed", "seed", com.seed);
    cfg_override(&app, cfg, "--workers", "workers", com.workers);
    cfg_override(&app, cfg, "--quad-order", "quad_order", com.quad_order);

    if (app.got_subcommand(solve)) {
      cfg_override(solve, cfg, "--pi", "pi", sa.pi);
      cfg_override(solve, cfg, "--mu", "mu", sa.mu);
      cfg_override(solve, cfg, "--delta", "delta", sa.delta);
      cfg_override(solve, cfg, "--tau", "tau", sa.tau);
      return cmd_solve(com, sa);
    }
    if (app.got_subcommand(sim)) {
      cfg_override(sim, cfg, "--pi", "pi", ma.pi);
      cfg_override(sim, cfg, "--mu", "mu", ma.mu);
      cfg_override(sim, cfg, "--tau", "tau", ma.tau);
      cfg_override(sim, cfg, "--n", "n", ma.n);
      cfg_override(sim, cfg, "--d", "d", ma.d);
      cfg_override(sim, cfg, "--reps", "reps", ma.reps);
      cfg_override(sim, cfg, "--classifier", "classifier", ma.classifier);
      cfg_override(sim, cfg, "--ridge", "ridge", ma.ridge);
      cfg_override(sim, cfg, "--err-test", "err_test", ma.err_test);
      cfg_override(sim, cfg, "--cal-test", "cal_test", ma.cal_test);
      cfg_override(sim, cfg, "--w2", "w2", ma.w2);
      return cmd_simulate(com, ma, "simulate.csv");
    }
    if (app.got_subcommand(st)) {
      cfg_override(st, cfg, "--pi", "pi", ta.pi);
      cfg_override(st, cfg, "--mu", "mu", ta.mu);
      cfg_override(st, cfg, "--n", "n", ta.n);
      cfg_override(st, cfg, "--d", "d", ta.d);
      cfg_override(st, cfg, "--reps", "reps", ta.reps);
      cfg_override(st, cfg, "--err-test", "err_test", ta.err_test);
      cfg_override(st, cfg, "--tau-grid", "tau_grid", ta.grid);
      return cmd_sweep_tau(com, ta);
    }
    if (app.got_subcommand(sp)) {
      cfg_override(sp, cfg, "--mu", "mu", pa.mu);
      cfg_override(sp, cfg, "--tau", "tau", pa.tau);
      cfg_override(sp, cfg, "--n", "n", pa.n);
      cfg_override(sp, cfg, "--d", "d", pa.d);
      cfg_override(sp, cfg, "--reps", "reps", pa.reps);
      cfg_override(sp, cfg, "--err-test", "err_test", pa.err_test);
      cfg_override(sp, cfg, "--pi-grid", "pi_grid", pa.grid);
      cfg_override(sp, cfg, "--use-tau-opt", "use_tau_opt", pa.use_tau_opt);
      return cmd_sweep_pi(com, pa);
    }
    if (app.got_subcommand(ph)) {
      cfg_override(ph, cfg, "--a-grid", "a_grid", ha.a_grid);
      cfg_override(ph, cfg, "--r-grid", "r_grid", ha.r_grid);
      cfg_override(ph, cfg, "--b", "b", ha.b);
      cfg_override(ph, cfg, "--c", "c", ha.c);
      cfg_override(ph, cfg, "--d", "d", ha.d);
      cfg_override(ph, cfg, "--C-pi", "C_pi", ha.c_pi);
      cfg_override(ph, cfg, "--C-mu", "C_mu", ha.c_mu);
      cfg_override(ph, cfg, "--C-n", "C_n", ha.c_n);
      cfg_override(ph, cfg, "--reps", "reps", ha.reps);
      cfg_override(ph, cfg, "--test-per-class", "test_per_class", ha.test_per_class);
      cfg_override(ph, cfg, "--noise", "noise", ha.noise);
      return cmd_phase(com, ha);
    }
    if (app.got_subcommand(ca)) {
      cfg_override(ca, cfg, "--pi", "pi", caa.pi);
      cfg_override(ca, cfg, "--mu", "mu", caa.mu);
      cfg_override(ca, cfg, "--tau", "tau", caa.tau);
      cfg_override(ca, cfg, "--n", "n", caa.n);
      cfg_override(ca, cfg, "--d", "d", caa.d);
      cfg_override(ca, cfg, "--reps", "reps", caa.reps);
      cfg_override(ca, cfg, "--cal-test", "cal_test", caa.cal_test);
      cfg_override(ca, cfg, "--bins", "bins", caa.bins);
      return cmd_calibrate(com, caa);
    }
    if (app.got_subcommand(px)) {
      cfg_override(px, cfg, "--lambdas", "lambdas", pxa.lambdas);
      cfg_override(px, cfg, "--x-min", "x_min", pxa.x_min);
      cfg_override(px, cfg, "--x-max", "x_max", pxa.x_max);
      cfg_override(px, cfg, "--points", "points", pxa.points);
      return cmd_proxplot(com, pxa);
    }
    if (app.got_subcommand(dd)) {
      cfg_override(dd, cfg, "--pi", "pi", da.pi);
      cfg_override(dd, cfg, "--mu", "mu", da.mu);
      cfg_override(dd, cfg, "--tau", "tau", da.tau);
      cfg_override(dd, cfg, "--n", "n", da.n);
      cfg_override(dd, cfg, "--d", "d", da.d);
      cfg_override(dd, cfg, "--file", "file", da.name);
      return cmd_dump(com, da);
    }
    return kExitConfig;  // unreachable given require_subcommand(1)
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const RegimeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
}
