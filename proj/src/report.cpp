#include "mfcert/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mfcert::report {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string json_number(double v) {
  if (!std::isfinite(v)) return "null";
  return fmt_double(v);
}

void json_number_array(std::string& out, const std::vector<double>& values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += json_number(values[i]);
  }
  out += ']';
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string trajectory_csv(const sim::EnsembleStats& stats) {
  std::string out = "t";
  for (int i = 1; i <= stats.k; ++i) out += ",mean_x" + std::to_string(i);
  out += ",sumsq,varsum,se_mean_max,se_sumsq\n";
  for (int p = 0; p < stats.grid.points; ++p) {
    out += fmt_double(stats.grid.time(p));
    for (double m : stats.mean_at(p)) {
      out += ',';
      out += fmt_double(m);
    }
    const auto pu = static_cast<std::size_t>(p);
    out += ',';
    out += fmt_double(stats.sumsq[pu]);
    out += ',';
    out += fmt_double(stats.varsum[pu]);
    out += ',';
    out += fmt_double(stats.se_mean_max(p));
    out += ',';
    out += fmt_double(stats.se_sumsq[pu]);
    out += '\n';
  }
  return out;
}

std::string trajectory_json(const sim::EnsembleStats& stats) {
  std::string out = "{\n  \"replicas\": " + std::to_string(stats.replicas);
  out += ",\n  \"t\": ";
  std::vector<double> ts(static_cast<std::size_t>(stats.grid.points));
  for (int p = 0; p < stats.grid.points; ++p)
    ts[static_cast<std::size_t>(p)] = stats.grid.time(p);
  json_number_array(out, ts);
  out += ",\n  \"mean\": [";
  for (int p = 0; p < stats.grid.points; ++p) {
    if (p) out += ',';
    const auto m = stats.mean_at(p);
    json_number_array(out, {m.begin(), m.end()});
  }
  out += "],\n  \"sumsq\": ";
  json_number_array(out, stats.sumsq);
  out += ",\n  \"varsum\": ";
  json_number_array(out, stats.varsum);
  out += ",\n  \"se_mean_max\": ";
  std::vector<double> semax(static_cast<std::size_t>(stats.grid.points));
  for (int p = 0; p < stats.grid.points; ++p)
    semax[static_cast<std::size_t>(p)] = stats.se_mean_max(p);
  json_number_array(out, semax);
  out += ",\n  \"se_sumsq\": ";
  json_number_array(out, stats.se_sumsq);
  out += "\n}\n";
  return out;
}

std::string meanfield_csv(const ode::OdeSolution& zbar) {
  const int k = zbar.dimension - 1;
  std::string out = "t";
  for (int i = 1; i <= k; ++i) out += ",x" + std::to_string(i);
  out += ",sumsq\n";
  for (int p = 0; p < zbar.grid.points; ++p) {
    out += fmt_double(zbar.time(p));
    for (double v : zbar.state(p)) {
      out += ',';
      out += fmt_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string meanfield_json(const ode::OdeSolution& zbar) {
  std::string out = "{\n  \"t\": ";
  std::vector<double> ts(static_cast<std::size_t>(zbar.grid.points));
  for (int p = 0; p < zbar.grid.points; ++p)
    ts[static_cast<std::size_t>(p)] = zbar.time(p);
  json_number_array(out, ts);
  out += ",\n  \"states\": [";
  for (int p = 0; p < zbar.grid.points; ++p) {
    if (p) out += ',';
    const auto s = zbar.state(p);
    json_number_array(out, {s.begin(), s.end()});
  }
  out += "]\n}\n";
  return out;
}

std::string bounds_json(const bounds::BoundsReport& report) {
  std::string out = "{\n";
  out += "  \"b2\": " + json_number(report.b2) + ",\n";
  out += "  \"L_m1bar\": " + json_number(report.L_m1bar) + ",\n";
  out += "  \"L_gbar\": " + json_number(report.L_gbar) + ",\n";
  out += "  \"Mn\": " + json_number(report.Mn) + ",\n";
  out += "  \"Delta_n\": " + json_number(report.Delta_n) + ",\n";
  out += "  \"grid_resolution\": " + std::to_string(report.grid_resolution) +
         ",\n";
  out += "  \"n\": " + std::to_string(report.n) + "\n";
  out += "}\n";
  return out;
}

std::string summary_json(const ConvergenceReport& report) {
  std::string out = "{\n";
  out += "  \"model\": \"" + report.model_label + "\",\n";
  out += "  \"params\": {";
  bool first = true;
  for (const auto& [name, value] : report.params) {
    if (!first) out += ", ";
    first = false;
    out += "\"" + name + "\": " + json_number(value);
  }
  out += "},\n";
  out += "  \"rows\": [\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const ReportRow& row = report.rows[i];
    out += "    {\"n\": " + std::to_string(row.n);
    out += ", \"replicas\": " + std::to_string(row.replicas);
    out += ", \"sup_mse\": " + json_number(row.sup_mse);
    out += ", \"envelope_margin\": " + json_number(row.envelope_margin);
    out += ", \"seed\": " + std::to_string(row.seed) + "}";
    if (i + 1 < report.rows.size()) out += ',';
    out += '\n';
  }
  out += "  ],\n";
  out += "  \"slope\": " +
         (report.slope ? json_number(*report.slope) : std::string("null")) +
         ",\n";
  out += "  \"bounds\": {\n";
  out += "    \"b2\": " + json_number(report.b2) + ",\n";
  out += "    \"L_m1bar\": " + json_number(report.L_m1bar) + ",\n";
  out += "    \"L_gbar\": " + json_number(report.L_gbar) + ",\n";
  out += "    \"Mn_per_n\": {";
  first = true;
  for (const auto& [n, mn] : report.Mn_per_n) {
    if (!first) out += ", ";
    first = false;
    out += "\"" + std::to_string(n) + "\": " + json_number(mn);
  }
  out += "},\n";
  out += "    \"Delta_n\": " + json_number(report.Delta_n) + "\n";
  out += "  }\n";
  out += "}\n";
  return out;
}

}  // namespace mfcert::report
