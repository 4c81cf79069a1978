#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mfcert/model.hpp"
#include "mfcert/report.hpp"

namespace mfcert::study {

struct RunConfig {
  // model source: exactly one of the two
  std::string model_path;
  std::string builtin_name;
  std::map<std::string, double> builtin_params;

  std::vector<double> x0;
  std::vector<long long> n_list;
  long long replicas = 1;
  double t_end = 1.0;
  int grid_points = 2;
  double ode_step = 1e-3;
  int bounds_resolution = 0;  // 0 = auto (~10^4 total grid points)
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "csv";  // trajectory file format: csv or json
  int threads = 0;             // 0 = hardware concurrency
};

struct ResolvedModel {
  model::ModelSpec spec;
  std::string label;
  std::map<std::string, double> params;
};

ResolvedModel resolve_model(const RunConfig& config);

void validate_config(const RunConfig& config, const model::ModelSpec& model);

/// Per-n ensembles against the mean-field reference plus the certified
/// envelope; writes trajectory_n<n>.<format>, meanfield.<format> and
/// summary.json into out_dir.
report::ConvergenceReport run_convergence_study(const RunConfig& config);

}  // namespace mfcert::study
