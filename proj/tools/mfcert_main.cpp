// mfcert: specify density-dependent jump models, simulate them exactly,
// integrate the mean-field limit and certify the moment-convergence bound.
//
// Exit codes: 0 success, 2 config/validation error, 3 I/O error,
// 4 runtime simulation error, 5 bound violation.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfcert/bounds.hpp"
#include "mfcert/errors.hpp"
#include "mfcert/model.hpp"
#include "mfcert/ode.hpp"
#include "mfcert/report.hpp"
#include "mfcert/sim.hpp"
#include "mfcert/study.hpp"

namespace {

using mfcert::study::RunConfig;

struct ModelFlags {
  std::string model_path;
  std::string builtin_name;
  std::vector<std::string> param_args;
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
  cmd->add_option("--model", flags.model_path, "model JSON file");
  cmd->add_option("--builtin", flags.builtin_name,
                  "builtin model: sis, bipartite_si, pure_death");
  cmd->add_option("--param", flags.param_args,
                  "builtin parameter as name=value (repeatable)");
}

std::map<std::string, double> parse_params(
    const std::vector<std::string>& args) {
  std::map<std::string, double> params;
  for (const std::string& arg : args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0)
      throw mfcert::ConfigError("--param expects name=value, got '" + arg + "'");
    const std::string name = arg.substr(0, eq);
    try {
      std::size_t used = 0;
      const double value = std::stod(arg.substr(eq + 1), &used);
      if (used != arg.size() - eq - 1) throw std::invalid_argument(arg);
      params[name] = value;
    } catch (const std::exception&) {
      throw mfcert::ConfigError("--param value for '" + name +
                                "' is not a number");
    }
  }
  return params;
}

void apply_model_flags(RunConfig& config, const ModelFlags& flags) {
  config.model_path = flags.model_path;
  config.builtin_name = flags.builtin_name;
  config.builtin_params = parse_params(flags.param_args);
}

mfcert::study::ResolvedModel resolve(const RunConfig& config) {
  return mfcert::study::resolve_model(config);
}

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) throw mfcert::ConfigError("--out directory required");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw mfcert::IoError("cannot create output directory '" + dir + "'");
}

int run_validate(const ModelFlags& flags, int bounds_grid) {
  RunConfig config;
  apply_model_flags(config, flags);
  const auto resolved = resolve(config);
  const auto& model = resolved.spec;
  try {
    mfcert::model::check_rates_nonnegative(
        model, bounds_grid > 0 ? bounds_grid
                               : mfcert::bounds::auto_resolution(model.k));
  } catch (const mfcert::NegativeRate& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  std::printf("ok: k=%d, jumps=%zu, params=%zu\n", model.k, model.jumps.size(),
              model.params.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density-dependent jump processes: exact simulation, "
               "mean-field limits and certified convergence bounds"};
  app.require_subcommand(1);

  ModelFlags validate_flags, simulate_flags, meanfield_flags, bounds_flags,
      converge_flags;

  // validate
  auto* cmd_validate = app.add_subcommand("validate", "check a model");
  add_model_flags(cmd_validate, validate_flags);
  int validate_grid = 0;
  cmd_validate->add_option("--bounds-grid", validate_grid,
                           "rate-scan grid resolution (0 = auto)");

  // simulate
  auto* cmd_simulate =
      app.add_subcommand("simulate", "run one ensemble and write trajectories");
  add_model_flags(cmd_simulate, simulate_flags);
  RunConfig sim_config;
  long long sim_n = 0;
  cmd_simulate->add_option("--n", sim_n, "population size")->required();
  cmd_simulate->add_option("--x0", sim_config.x0, "initial state (comma list)")
      ->required()
      ->delimiter(',');
  cmd_simulate->add_option("--replicas", sim_config.replicas, "replica count")
      ->required();
  cmd_simulate->add_option("--t-end", sim_config.t_end, "time horizon")
      ->required();
  cmd_simulate->add_option("--grid", sim_config.grid_points,
                           "sampling grid points");
  cmd_simulate->add_option("--seed", sim_config.seed, "master RNG seed")
      ->required();
  cmd_simulate->add_option("--threads", sim_config.threads,
                           "worker threads (0 = hardware)");
  cmd_simulate->add_option("--out", sim_config.out_dir, "output directory")
      ->required();
  cmd_simulate->add_option("--format", sim_config.format, "csv or json");

  // meanfield
  auto* cmd_meanfield =
      app.add_subcommand("meanfield", "integrate the mean-field limit");
  add_model_flags(cmd_meanfield, meanfield_flags);
  RunConfig mf_config;
  cmd_meanfield->add_option("--x0", mf_config.x0, "initial state (comma list)")
      ->required()
      ->delimiter(',');
  cmd_meanfield->add_option("--t-end", mf_config.t_end, "time horizon")
      ->required();
  cmd_meanfield->add_option("--grid", mf_config.grid_points,
                            "sampling grid points");
  cmd_meanfield->add_option("--ode-step", mf_config.ode_step,
                            "max RK4 substep");
  cmd_meanfield->add_option("--out", mf_config.out_dir, "output directory")
      ->required();
  cmd_meanfield->add_option("--format", mf_config.format, "csv or json");

  // bounds
  auto* cmd_bounds =
      app.add_subcommand("bounds", "compute the certified constants");
  add_model_flags(cmd_bounds, bounds_flags);
  RunConfig bounds_config;
  long long bounds_n = 0;
  cmd_bounds->add_option("--n", bounds_n, "population size")->required();
  cmd_bounds->add_option("--x0", bounds_config.x0,
                         "initial state (comma list)")
      ->required()
      ->delimiter(',');
  cmd_bounds->add_option("--bounds-grid", bounds_config.bounds_resolution,
                         "grid resolution (0 = auto)");
  cmd_bounds->add_option("--out", bounds_config.out_dir, "output directory")
      ->required();

  // converge
  auto* cmd_converge = app.add_subcommand(
      "converge", "ensembles vs mean-field with certified envelopes");
  add_model_flags(cmd_converge, converge_flags);
  RunConfig conv_config;
  cmd_converge->add_option("--n", conv_config.n_list,
                           "population sizes (comma list)")
      ->required()
      ->delimiter(',');
  cmd_converge->add_option("--x0", conv_config.x0,
                           "initial state (comma list)")
      ->required()
      ->delimiter(',');
  cmd_converge->add_option("--replicas", conv_config.replicas,
                           "replica count")
      ->required();
  cmd_converge->add_option("--t-end", conv_config.t_end, "time horizon")
      ->required();
  cmd_converge->add_option("--grid", conv_config.grid_points,
                           "sampling grid points");
  cmd_converge->add_option("--ode-step", conv_config.ode_step,
                           "max RK4 substep");
  cmd_converge->add_option("--bounds-grid", conv_config.bounds_resolution,
                           "bounds grid resolution (0 = auto)");
  cmd_converge->add_option("--seed", conv_config.seed, "master RNG seed")
      ->required();
  cmd_converge->add_option("--threads", conv_config.threads,
                           "worker threads (0 = hardware)");
  cmd_converge->add_option("--out", conv_config.out_dir, "output directory")
      ->required();
  cmd_converge->add_option("--format", conv_config.format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_validate->parsed()) return run_validate(validate_flags, validate_grid);

    if (cmd_simulate->parsed()) {
      apply_model_flags(sim_config, simulate_flags);
      sim_config.n_list = {sim_n};
      const auto resolved = resolve(sim_config);
      mfcert::study::validate_config(sim_config, resolved.spec);
      ensure_out_dir(sim_config.out_dir);
      const mfcert::sim::TimeGrid grid(sim_config.t_end, sim_config.grid_points);
      const auto stats = mfcert::sim::run_ensemble(
          resolved.spec, sim_n, sim_config.x0, grid, sim_config.replicas,
          mfcert::sim::RngSeed{sim_config.seed}, sim_config.threads);
      const std::string path = sim_config.out_dir + "/trajectory_n" +
                               std::to_string(sim_n) + "." + sim_config.format;
      mfcert::report::write_text_file(
          path, sim_config.format == "csv"
                    ? mfcert::report::trajectory_csv(stats)
                    : mfcert::report::trajectory_json(stats));
      std::printf("wrote %s\n", path.c_str());
      return 0;
    }

    if (cmd_meanfield->parsed()) {
      apply_model_flags(mf_config, meanfield_flags);
      const auto resolved = resolve(mf_config);
      if (static_cast<int>(mf_config.x0.size()) != resolved.spec.k)
        throw mfcert::ConfigError("x0 dimension does not match model");
      if (!resolved.spec.in_domain(mf_config.x0))
        throw mfcert::ConfigError("x0 outside the domain box");
      if (!(mf_config.t_end > 0.0))
        throw mfcert::ConfigError("t_end must be positive");
      ensure_out_dir(mf_config.out_dir);
      if (mf_config.format != "csv" && mf_config.format != "json")
        throw mfcert::ConfigError("format must be csv or json");
      const mfcert::sim::TimeGrid grid(mf_config.t_end, mf_config.grid_points);
      const auto meanfield = mfcert::ode::meanfield_on_grid(
          resolved.spec, mf_config.x0, grid, mf_config.ode_step);
      const auto zbar = mfcert::ode::reference_moment_trajectory(meanfield);
      const std::string path =
          mf_config.out_dir + "/meanfield." + mf_config.format;
      mfcert::report::write_text_file(
          path, mf_config.format == "csv" ? mfcert::report::meanfield_csv(zbar)
                                          : mfcert::report::meanfield_json(zbar));
      std::printf("wrote %s\n", path.c_str());
      return 0;
    }

    if (cmd_bounds->parsed()) {
      apply_model_flags(bounds_config, bounds_flags);
      const auto resolved = resolve(bounds_config);
      if (static_cast<int>(bounds_config.x0.size()) != resolved.spec.k)
        throw mfcert::ConfigError("x0 dimension does not match model");
      if (!resolved.spec.in_domain(bounds_config.x0))
        throw mfcert::ConfigError("x0 outside the domain box");
      ensure_out_dir(bounds_config.out_dir);
      const int resolution =
          bounds_config.bounds_resolution > 0
              ? bounds_config.bounds_resolution
              : mfcert::bounds::auto_resolution(resolved.spec.k);
      const auto report = mfcert::bounds::compute_bounds_report(
          resolved.spec, bounds_n, bounds_config.x0, resolution);
      const std::string path = bounds_config.out_dir + "/bounds.json";
      mfcert::report::write_text_file(path,
                                      mfcert::report::bounds_json(report));
      std::printf("wrote %s\n", path.c_str());
      return 0;
    }

    if (cmd_converge->parsed()) {
      apply_model_flags(conv_config, converge_flags);
      const auto report = mfcert::study::run_convergence_study(conv_config);
      for (const auto& row : report.rows)
        std::printf("n=%lld sup_mse=%s envelope_margin=%s\n", row.n,
                    mfcert::report::fmt_double(row.sup_mse).c_str(),
                    mfcert::report::fmt_double(row.envelope_margin).c_str());
      if (report.slope)
        std::printf("slope=%s\n",
                    mfcert::report::fmt_double(*report.slope).c_str());
      for (const auto& row : report.rows)
        if (row.envelope_margin < 0.0) {
          std::fprintf(stderr,
                       "error: envelope breached beyond statistical tolerance "
                       "at n=%lld (margin %s)\n",
                       row.n,
                       mfcert::report::fmt_double(row.envelope_margin).c_str());
          return 5;
        }
      return 0;
    }
  } catch (const mfcert::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
