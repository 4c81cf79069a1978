#pragma once

// Deterministic serialization: fixed column/key order, %.17g floats, LF line
// endings, binary-mode writes. Identical inputs therefore produce identical
// bytes, which the determinism tests compare directly.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfcert/bounds.hpp"
#include "mfcert/ode.hpp"
#include "mfcert/sim.hpp"

namespace mfcert::report {

std::string fmt_double(double v);

void write_text_file(const std::string& path, const std::string& content);

/// Header: t,mean_x1,...,mean_xk,sumsq,varsum,se_mean_max,se_sumsq
std::string trajectory_csv(const sim::EnsembleStats& stats);
std::string trajectory_json(const sim::EnsembleStats& stats);

/// Header: t,x1,...,xk,sumsq for a moment trajectory (last coordinate is
/// the appended sum of squares).
std::string meanfield_csv(const ode::OdeSolution& zbar);
std::string meanfield_json(const ode::OdeSolution& zbar);

std::string bounds_json(const bounds::BoundsReport& report);

struct ReportRow {
  long long n;
  long long replicas;
  double sup_mse;
  double envelope_margin;  // min over t of bound + 3 SE - empirical gap
  std::uint64_t seed;
};

struct ConvergenceReport {
  std::string model_label;
  std::map<std::string, double> params;
  std::vector<ReportRow> rows;
  std::optional<double> slope;  // log sup_mse vs log n, when >= 3 rows
  double b2 = 0.0;
  double L_m1bar = 0.0;
  double L_gbar = 0.0;
  double Delta_n = 0.0;
  std::map<long long, double> Mn_per_n;
};

std::string summary_json(const ConvergenceReport& report);

}  // namespace mfcert::report
