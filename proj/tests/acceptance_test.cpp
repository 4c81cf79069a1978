// End-to-end acceptance checks: oracles, convergence, certified bounds and
// CLI determinism. Each numbered check prints one [PASS]/[FAIL] line; the
// process exits nonzero if any check fails.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mfcert/bounds.hpp"
#include "mfcert/model.hpp"
#include "mfcert/ode.hpp"
#include "mfcert/sim.hpp"

namespace {

using mfcert::sim::TimeGrid;

int g_failed = 0;

void report(int number, const char* label, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", number, label,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failed;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

mfcert::model::ModelSpec sis_model() {
  return mfcert::model::builtin("sis", {{"beta", 2.0}, {"gamma", 1.0}});
}

// Offset-accumulated sample mean, matching the reduction the ensemble
// statistics use so degenerate points reduce exactly.
double shifted_mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x - v.front();
  return v.front() + acc / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  const double m = shifted_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// 1. Mean-field trajectory against the SIS logistic closed form
//    x(t) = K x0 e^{rt} / (K + x0 (e^{rt} - 1)), r = beta - gamma, K = r/beta.
void check_meanfield_oracle() {
  const auto model = sis_model();
  const std::vector<double> x0{0.1};
  const auto sol = mfcert::ode::meanfield_trajectory(model, x0, 1.0, 1e-3);
  const double r = 1.0, cap = 0.5;
  const double ert = std::exp(r);
  const double exact = cap * x0[0] * ert / (cap + x0[0] * (ert - 1.0));
  const double got = sol.state(sol.grid.points - 1)[0];
  const double err = std::abs(got - exact);
  report(1, "mean-field logistic oracle", err <= 1e-6,
         "xbar(1)=" + fmt(got) + " exact=" + fmt(exact) + " err=" + fmt(err));
}

// 2. Ensemble mean of the pure death process against e^{-t}.
void check_ssa_mean_oracle() {
  const auto model = mfcert::model::builtin("pure_death", {{"gamma", 1.0}});
  const std::vector<double> x0{1.0};
  const TimeGrid grid(2.0, 5);
  const auto stats =
      mfcert::sim::run_ensemble(model, 100, x0, grid, 10000, {4242});
  bool ok = true;
  std::string detail;
  for (int p : {1, 2, 4}) {
    const double err = std::abs(stats.mean_at(p)[0] - std::exp(-grid.time(p)));
    const double lim = 3.0 * stats.se_mean_at(p)[0];
    ok = ok && err <= lim;
    if (!detail.empty()) detail += ", ";
    detail += "t=" + fmt(grid.time(p)) + " err=" + fmt(err) + " 3se=" +
              fmt(lim);
  }
  report(2, "ssa mean matches exponential decay", ok, detail);
}

// Shared SIS ensembles for the convergence, envelope and remainder checks.
struct SisEnsembles {
  mfcert::model::ModelSpec model;
  std::vector<double> x0;
  TimeGrid grid;
  std::vector<long long> n_values;
  std::vector<mfcert::sim::EnsembleRun> runs;
  mfcert::ode::OdeSolution meanfield;
  mfcert::ode::OdeSolution zbar;
};

SisEnsembles build_sis_ensembles() {
  auto model = sis_model();
  const std::vector<double> x0{0.2};
  const TimeGrid grid(5.0, 101);
  auto meanfield = mfcert::ode::meanfield_on_grid(model, x0, grid, 1e-3);
  auto zbar = mfcert::ode::reference_moment_trajectory(meanfield);
  std::vector<long long> n_values{100, 400, 1600};
  std::vector<mfcert::sim::EnsembleRun> runs;
  for (long long n : n_values)
    runs.push_back(
        mfcert::sim::run_ensemble_retained(model, n, x0, grid, 2000, {42}));
  return SisEnsembles{std::move(model), x0,
                      grid,             std::move(n_values),
                      std::move(runs),  std::move(meanfield),
                      std::move(zbar)};
}

// 3. sup_t MSE strictly decreasing in n with log-log slope near -1.
void check_mean_square(const SisEnsembles& e) {
  std::vector<double> sup;
  for (const auto& run : e.runs) {
    const auto mse = mfcert::sim::mse_vs_reference(run.stats, e.meanfield);
    sup.push_back(*std::max_element(mse.begin(), mse.end()));
  }
  const bool decreasing = sup[0] > sup[1] && sup[1] > sup[2];
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < sup.size(); ++i) {
    const double lx = std::log(static_cast<double>(e.n_values[i]));
    const double ly = std::log(sup[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(sup.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const bool ok = decreasing && slope >= -1.3 && slope <= -0.7;
  report(3, "mean-square error shrinks with n", ok,
         "sup_mse=" + fmt(sup[0]) + "/" + fmt(sup[1]) + "/" + fmt(sup[2]) +
             " slope=" + fmt(slope));
}

// 4. Certified envelope plus 3 SE dominates the empirical moment gap at
//    every grid point (n = 400 row).
void check_envelope(const SisEnsembles& e) {
  const auto [env, rep] = mfcert::bounds::theorem_envelope(
      e.model, 400, e.x0, e.grid, mfcert::bounds::auto_resolution(e.model.k));
  const auto& st = e.runs[1].stats;
  bool ok = true;
  double min_margin = std::numeric_limits<double>::infinity();
  for (int p = 0; p < e.grid.points; ++p) {
    double gap2 = 0.0;
    for (int i = 0; i < st.k; ++i) {
      const double d = st.mean_at(p)[i] - e.zbar.state(p)[i];
      gap2 += d * d;
    }
    const double dz = st.sumsq[p] - e.zbar.state(p)[st.k];
    gap2 += dz * dz;
    double se2 = st.se_sumsq[p] * st.se_sumsq[p];
    for (int i = 0; i < st.k; ++i)
      se2 += st.se_mean_at(p)[i] * st.se_mean_at(p)[i];
    const double allowance = env[p] + 3.0 * std::sqrt(se2);
    const double margin = allowance - std::sqrt(gap2);
    min_margin = std::min(min_margin, margin);
    ok = ok && margin >= 0.0;
  }
  report(4, "certified envelope contains empirical moment gap", ok,
         "n=400 min margin=" + fmt(min_margin) + " Mn=" + fmt(rep.Mn) +
             " L=" + fmt(rep.L_gbar));
}

// 5. Second-order remainder inequality for m2n on every ensemble and grid
//    time, and the recovered curvature ratio for m1n equal to -beta.
void check_taylor_remainder(const SisEnsembles& e) {
  const auto drifts = mfcert::model::limit_drifts(e.model);
  const int res = mfcert::bounds::auto_resolution(e.model.k);
  bool ok = true;
  double min_margin = std::numeric_limits<double>::infinity();
  double worst_h = -std::numeric_limits<double>::infinity();
  for (std::size_t ri = 0; ri < e.runs.size(); ++ri) {
    const long long n = e.n_values[ri];
    const auto& run = e.runs[ri];
    const auto& st = run.stats;
    const double b = mfcert::bounds::hessian_bound(
        [&](std::span<const double> x) { return drifts.m2n(n, x); },
        e.model.domain, res);
    std::vector<double> fvals(static_cast<std::size_t>(st.replicas));
    std::vector<double> gvals(static_cast<std::size_t>(st.replicas));
    for (int p = 0; p < e.grid.points; ++p) {
      for (long long r = 0; r < st.replicas; ++r) {
        const auto x = run.state(r, p);
        fvals[static_cast<std::size_t>(r)] = drifts.m2n(n, x);
        gvals[static_cast<std::size_t>(r)] = drifts.m1n(n, x)[0];
      }
      const double root_r = std::sqrt(static_cast<double>(st.replicas));
      const double gap =
          std::abs(shifted_mean(fvals) - drifts.m2n(n, st.mean_at(p)));
      const double allowance =
          0.5 * b * st.varsum[p] + 3.0 * sample_sd(fvals) / root_r;
      min_margin = std::min(min_margin, allowance - gap);
      ok = ok && gap <= allowance;
      if (st.varsum[p] > 0.0) {
        const double h =
            (shifted_mean(gvals) - drifts.m1n(n, st.mean_at(p))[0]) /
            st.varsum[p];
        const double se_h = sample_sd(gvals) / root_r / st.varsum[p];
        worst_h = std::max(worst_h, std::abs(h + 2.0) - 3.0 * se_h);
        ok = ok && std::abs(h + 2.0) <= 3.0 * se_h + 1e-9;
      }
    }
  }
  report(5, "remainder bound and recovered curvature", ok,
         "min bound margin=" + fmt(min_margin) +
             " max(|h+2|-3se)=" + fmt(worst_h));
}

// 6. n * Mn equals the hand-derived 9/8 for well separated n.
void check_drift_gap() {
  const auto model = sis_model();
  bool ok = true;
  std::string detail;
  for (long long n : {10LL, 100LL, 1000LL}) {
    const double v =
        static_cast<double>(n) * mfcert::bounds::drift_gap(model, n, 101);
    ok = ok && std::abs(v - 1.125) <= 1e-3;
    if (!detail.empty()) detail += ", ";
    detail += "n=" + std::to_string(n) + ": " + fmt(v);
  }
  report(6, "drift gap scales as 9/(8n)", ok, detail);
}

// 7. Limit drift identity m2bar = sum_i 2 m1bar_i x_i bit for bit, and the
//    jump decomposition n (m2n - m2bar) = sum_j q_j ||delta_j||^2.
void scan_identities(const mfcert::model::ModelSpec& model, int per_axis,
                     bool& exact, double& max_jump) {
  const auto drifts = mfcert::model::limit_drifts(model);
  const int k = model.k;
  std::vector<double> x(static_cast<std::size_t>(k));
  long long total = 1;
  for (int i = 0; i < k; ++i) total *= per_axis;
  for (long long t = 0; t < total; ++t) {
    long long rem = t;
    for (int i = 0; i < k; ++i) {
      const int cell = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      x[static_cast<std::size_t>(i)] =
          model.domain.lower[static_cast<std::size_t>(i)] +
          model.domain.width(i) * cell / (per_axis - 1);
    }
    const auto m1 = drifts.m1bar(x);
    double manual = 0.0;
    for (int i = 0; i < k; ++i)
      manual += 2.0 * m1[static_cast<std::size_t>(i)] *
                x[static_cast<std::size_t>(i)];
    const double m2 = drifts.m2bar(x);
    if (m2 != manual) exact = false;
    const double lhs = 7.0 * (drifts.m2n(7, x) - m2);
    double rhs = 0.0;
    for (std::size_t j = 0; j < model.jumps.size(); ++j)
      rhs += model.rate(j, x) * model.jumps[j].delta_norm2;
    max_jump = std::max(max_jump, std::abs(lhs - rhs));
  }
}

void check_identities() {
  bool exact = true;
  double jump_sis = 0.0, jump_bip = 0.0;
  scan_identities(sis_model(), 10000, exact, jump_sis);
  scan_identities(
      mfcert::model::builtin("bipartite_si", {{"bm", 1.5}, {"bf", 1.5}}), 10,
      exact, jump_bip);
  const bool ok = exact && jump_sis <= 1e-10 && jump_bip <= 1e-10;
  report(7, "limit drift identity and jump decomposition", ok,
         std::string("identity ") + (exact ? "exact" : "violated") +
             ", jump residual sis=" + fmt(jump_sis) + " bipartite=" +
             fmt(jump_bip));
}

// 8. Symmetric bipartite model: male and female marginals agree in the
//    mean-field trajectory and across ensemble replicas.
void check_bipartite_symmetry() {
  const auto model =
      mfcert::model::builtin("bipartite_si", {{"bm", 1.5}, {"bf", 1.5}});
  const std::vector<double> x0{0.9, 0.1, 0.9, 0.1};
  const auto sol = mfcert::ode::meanfield_trajectory(model, x0, 2.0, 1e-3);
  double max_asym = 0.0;
  for (int p = 0; p < sol.grid.points; ++p) {
    const auto x = sol.state(p);
    max_asym = std::max(max_asym, std::abs(x[0] - x[2]));
    max_asym = std::max(max_asym, std::abs(x[1] - x[3]));
  }
  const TimeGrid grid(2.0, 21);
  const auto run =
      mfcert::sim::run_ensemble_retained(model, 200, x0, grid, 2000, {1702});
  const auto replicas = run.stats.replicas;
  double max_z = 0.0;
  bool paired_ok = true;
  std::vector<double> d(static_cast<std::size_t>(replicas));
  for (int p = 0; p < grid.points; ++p) {
    for (int pair = 0; pair < 2; ++pair) {
      for (long long r = 0; r < replicas; ++r) {
        const auto x = run.state(r, p);
        d[static_cast<std::size_t>(r)] = x[pair] - x[pair + 2];
      }
      const double mean_d = shifted_mean(d);
      const double se = sample_sd(d) / std::sqrt(static_cast<double>(replicas));
      if (se == 0.0) {
        paired_ok = paired_ok && mean_d == 0.0;
      } else {
        max_z = std::max(max_z, std::abs(mean_d) / se);
        paired_ok = paired_ok && std::abs(mean_d) <= 3.0 * se;
      }
    }
  }
  const bool ok = max_asym <= 1e-12 && paired_ok;
  report(8, "bipartite male/female symmetry", ok,
         "meanfield max asym=" + fmt(max_asym) + " ensemble max |z|=" +
             fmt(max_z));
}

// 9. RK4 order, Hessian bound and Lipschitz estimate calibration.
void check_numerics() {
  const mfcert::ode::IvpProblem prob{
      1,
      [](double, std::span<const double> x, std::span<double> dxdt) {
        dxdt[0] = -x[0];
      },
      0.0,
      1.0,
      {1.0}};
  const double exact = std::exp(-1.0);
  const auto coarse = mfcert::ode::integrate_ivp(prob, 1e-2);
  const auto fine = mfcert::ode::integrate_ivp(prob, 5e-3);
  const double e1 = std::abs(coarse.state(coarse.grid.points - 1)[0] - exact);
  const double e2 = std::abs(fine.state(fine.grid.points - 1)[0] - exact);
  const double ratio = e1 / e2;
  const auto model = sis_model();
  const auto drifts = mfcert::model::limit_drifts(model);
  const double hess =
      mfcert::bounds::hessian_bound(
          [&](std::span<const double> x) { return drifts.m2n(10, x); },
          model.domain, 101) /
      1.05;
  const double lip = mfcert::bounds::lipschitz_estimate(
      [&](std::span<const double> x) { return drifts.m1bar(x)[0]; },
      model.domain, 101);
  const bool ok = ratio >= 12.0 && ratio <= 20.0 &&
                  std::abs(hess - 20.4) <= 0.02 * 20.4 &&
                  std::abs(lip - 3.15) <= 0.02 * 3.15;
  report(9, "rk4 order, curvature and lipschitz calibration", ok,
         "halving ratio=" + fmt(ratio) + " hessian=" + fmt(hess) +
             " (want 20.4) lipschitz=" + fmt(lip) + " (want 3.15)");
}

// 10. converge CLI with the same seed and different thread counts writes
//     byte-identical files.
int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(MFCERT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

std::optional<std::string> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void check_determinism() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "mfcert_acceptance";
  std::error_code ec;
  fs::remove_all(base, ec);
  const std::string common =
      "converge --builtin sis --param beta=2 --param gamma=1 --n 50,100 "
      "--x0 0.2 --replicas 200 --t-end 1 --grid 11 --ode-step 1e-3 "
      "--bounds-grid 101 --seed 99 --format csv";
  const int rc1 = run_cli(common + " --threads 1 --out " +
                          (base / "a").string());
  const int rc4 = run_cli(common + " --threads 4 --out " +
                          (base / "b").string());
  bool ok = rc1 == 0 && rc4 == 0;
  int matched = 0;
  for (const char* name : {"trajectory_n50.csv", "trajectory_n100.csv",
                           "meanfield.csv", "summary.json"}) {
    const auto a = slurp(base / "a" / name);
    const auto b = slurp(base / "b" / name);
    const bool same = a && b && !a->empty() && *a == *b;
    ok = ok && same;
    if (same) ++matched;
  }
  report(10, "byte-identical outputs across thread counts", ok,
         "exit=" + std::to_string(rc1) + "/" + std::to_string(rc4) +
             " files matched=" + std::to_string(matched) + "/4");
}

}  // namespace

int main() {
  try {
    check_meanfield_oracle();
    check_ssa_mean_oracle();
    const SisEnsembles shared = build_sis_ensembles();
    check_mean_square(shared);
    check_envelope(shared);
    check_taylor_remainder(shared);
    check_drift_gap();
    check_identities();
    check_bipartite_symmetry();
    check_numerics();
    check_determinism();
  } catch (const std::exception& e) {
    std::printf("[FAIL] unhandled exception: %s\n", e.what());
    return 1;
  }
  if (g_failed == 0) {
    std::printf("all acceptance checks passed\n");
    return 0;
  }
  std::printf("%d acceptance check(s) failed\n", g_failed);
  return 1;
}
