#include "mfcert/study.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mfcert/bounds.hpp"
#include "mfcert/ode.hpp"
#include "mfcert/sim.hpp"

namespace mfcert::study {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading model file '" + path + "'");
  return buf.str();
}

void check_lattice(const model::ModelSpec& model, std::span<const double> x0,
                   long long n) {
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double scaled = (x0[i] - model.domain.lower[i]) * static_cast<double>(n);
    const double back = model.domain.lower[i] +
                        static_cast<double>(std::llround(scaled)) /
                            static_cast<double>(n);
    if (std::abs(back - x0[i]) > model::kDomainTolerance)
      throw ConfigError("x0 coordinate " + std::to_string(i + 1) +
                        " is not on the 1/n lattice for n = " +
                        std::to_string(n));
  }
}

double combined_se(const sim::EnsembleStats& stats, int p) {
  double total = 0.0;
  for (double se : stats.se_mean_at(p)) total += se * se;
  const double seq = stats.se_sumsq[static_cast<std::size_t>(p)];
  return std::sqrt(total + seq * seq);
}

double moment_gap(const sim::EnsembleStats& stats,
                  const ode::OdeSolution& zbar, int p) {
  const auto mean = stats.mean_at(p);
  const auto ref = zbar.state(p);
  double norm2 = 0.0;
  for (int i = 0; i < stats.k; ++i) {
    const double d = mean[i] - ref[i];
    norm2 += d * d;
  }
  const double dq = stats.sumsq[static_cast<std::size_t>(p)] - ref[stats.k];
  return std::sqrt(norm2 + dq * dq);
}

}  // namespace

ResolvedModel resolve_model(const RunConfig& config) {
  const bool from_file = !config.model_path.empty();
  const bool from_builtin = !config.builtin_name.empty();
  if (from_file == from_builtin)
    throw ConfigError("specify exactly one of --model and --builtin");
  if (from_file) {
    model::ModelSpec spec = model::load_model(read_file(config.model_path));
    auto params = spec.params;
    return ResolvedModel{std::move(spec), config.model_path,
                         std::move(params)};
  }
  model::ModelSpec spec =
      model::builtin(config.builtin_name, config.builtin_params);
  return ResolvedModel{std::move(spec), config.builtin_name,
                       config.builtin_params};
}

void validate_config(const RunConfig& config, const model::ModelSpec& model) {
  if (config.n_list.empty()) throw ConfigError("need at least one n");
  for (std::size_t i = 0; i < config.n_list.size(); ++i) {
    if (config.n_list[i] < 1) throw ConfigError("n must be >= 1");
    if (i > 0 && config.n_list[i] <= config.n_list[i - 1])
      throw ConfigError("n list must be strictly increasing");
  }
  if (config.replicas < 1) throw ConfigError("replicas must be >= 1");
  if (!(config.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (config.grid_points < 2) throw ConfigError("grid needs at least 2 points");
  if (!(config.ode_step > 0.0)) throw ConfigError("ode step must be positive");
  if (config.bounds_resolution != 0 && config.bounds_resolution < 2)
    throw ConfigError("bounds grid resolution must be >= 2 (or 0 for auto)");
  if (config.threads < 0) throw ConfigError("threads must be >= 0");
  if (config.format != "csv" && config.format != "json")
    throw ConfigError("format must be csv or json");
  if (static_cast<int>(config.x0.size()) != model.k)
    throw ConfigError("x0 has dimension " + std::to_string(config.x0.size()) +
                      ", model has k = " + std::to_string(model.k));
  if (!model.in_domain(config.x0))
    throw ConfigError("x0 is outside the domain box");
  for (long long n : config.n_list) check_lattice(model, config.x0, n);
}

report::ConvergenceReport run_convergence_study(const RunConfig& config) {
  ResolvedModel resolved = resolve_model(config);
  const model::ModelSpec& model = resolved.spec;
  validate_config(config, model);
  if (config.out_dir.empty()) throw ConfigError("output directory required");

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec || !std::filesystem::is_directory(config.out_dir))
    throw IoError("cannot create output directory '" + config.out_dir + "'");

  const sim::TimeGrid grid(config.t_end, config.grid_points);
  const int resolution = config.bounds_resolution > 0
                             ? config.bounds_resolution
                             : bounds::auto_resolution(model.k);

  const ode::OdeSolution meanfield =
      ode::meanfield_on_grid(model, config.x0, grid, config.ode_step);
  const ode::OdeSolution zbar = ode::reference_moment_trajectory(meanfield);

  const std::string mf_path =
      config.out_dir + "/meanfield." + config.format;
  report::write_text_file(mf_path, config.format == "csv"
                                       ? report::meanfield_csv(zbar)
                                       : report::meanfield_json(zbar));

  report::ConvergenceReport out;
  out.model_label = resolved.label;
  out.params = resolved.params;

  for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
    const long long n = config.n_list[ni];
    const sim::EnsembleStats stats =
        sim::run_ensemble(model, n, config.x0, grid, config.replicas,
                          sim::RngSeed{config.seed}, config.threads);

    const std::string traj_path = config.out_dir + "/trajectory_n" +
                                  std::to_string(n) + "." + config.format;
    report::write_text_file(traj_path, config.format == "csv"
                                           ? report::trajectory_csv(stats)
                                           : report::trajectory_json(stats));

    const std::vector<double> mse = sim::mse_vs_reference(stats, meanfield);
    const double sup_mse = *std::max_element(mse.begin(), mse.end());

    const auto [envelope, bound_report] =
        bounds::theorem_envelope(model, n, config.x0, grid, resolution);
    double margin = std::numeric_limits<double>::infinity();
    for (int p = 0; p < grid.points; ++p)
      margin = std::min(margin,
                        envelope[static_cast<std::size_t>(p)] +
                            3.0 * combined_se(stats, p) -
                            moment_gap(stats, zbar, p));

    out.rows.push_back(report::ReportRow{n, config.replicas, sup_mse, margin,
                                         config.seed});
    out.Mn_per_n[n] = bound_report.Mn;
    if (ni == 0) {
      out.b2 = bound_report.b2;
      out.L_m1bar = bound_report.L_m1bar;
      out.L_gbar = bound_report.L_gbar;
      out.Delta_n = bound_report.Delta_n;
    }
  }

  if (out.rows.size() >= 3 &&
      std::all_of(out.rows.begin(), out.rows.end(),
                  [](const report::ReportRow& r) { return r.sup_mse > 0.0; })) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double count = static_cast<double>(out.rows.size());
    for (const auto& row : out.rows) {
      const double lx = std::log(static_cast<double>(row.n));
      const double ly = std::log(row.sup_mse);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    out.slope = (sxy - sx * sy / count) / (sxx - sx * sx / count);
  }

  report::write_text_file(config.out_dir + "/summary.json",
                          report::summary_json(out));
  return out;
}

}  // namespace mfcert::study
