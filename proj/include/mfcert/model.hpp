#pragma once

// Density-dependent jump model on a box domain C. A population of size n
// lives on the lattice {lower + m/n}; jump j moves the scaled state by
// delta_j / n at rate n * q_j(x), with q_j given by a rate expression in
// the scaled coordinates x1..xk.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfcert/errors.hpp"
#include "mfcert/expr.hpp"

namespace mfcert::model {

inline constexpr double kRateTolerance = 1e-12;    // clamp window below zero
inline constexpr double kDomainTolerance = 1e-12;  // closed-box membership slack

struct DomainBox {
  std::vector<double> lower;
  std::vector<double> upper;

  int dimension() const { return static_cast<int>(lower.size()); }
  double width(int i) const { return upper[i] - lower[i]; }
  bool contains(std::span<const double> x, double tol = kDomainTolerance) const;

  /// Largest |coordinate| anywhere in the box.
  double max_coordinate_magnitude() const;

  void validate() const;  // throws SchemaError
};

struct JumpSpec {
  std::vector<long long> delta;
  expr::ExprAst rate;
  expr::CompiledExpr compiled_rate;
  std::vector<double> delta_real;  // delta as doubles
  double delta_norm2 = 0.0;        // ||delta||^2
};

struct ModelSpec {
  int k;
  std::map<std::string, double> params;
  DomainBox domain;
  std::vector<JumpSpec> jumps;
  expr::SymbolTable symbols;

  /// Density rate q_j(x), clamped to 0 within kRateTolerance below zero;
  /// more negative values throw NegativeRate.
  double rate(std::size_t j, std::span<const double> x) const;

  bool in_domain(std::span<const double> x) const {
    return domain.contains(x);
  }
};

ModelSpec make_model(
    int k, std::map<std::string, double> params, DomainBox domain,
    const std::vector<std::pair<std::vector<long long>, std::string>>& jumps);

/// Parse a model from its JSON document text.
ModelSpec load_model(const std::string& document);

/// "sis", "bipartite_si" or "pure_death" with the given parameters.
ModelSpec builtin(const std::string& name,
                  const std::map<std::string, double>& params);

/// First scaled drift sum_j q_j(x) delta_j; independent of n.
std::vector<double> drift_m1(const ModelSpec& model, long long n,
                             std::span<const double> x);

/// Second-moment drift sum_j q_j(x) (2 delta_j . x + ||delta_j||^2 / n),
/// the expanded form of n((x + delta/n)^2 - x^2) summed over coordinates.
double drift_m2(const ModelSpec& model, long long n, std::span<const double> x);

/// n-family drifts plus their n -> infinity limits. The limit m2bar is
/// computed as sum_i 2 m1bar_i(x) x_i, the same reduction the identity
/// tests rely on. No domain checks here; evaluators are polynomial in x.
class DriftEvaluators {
 public:
  explicit DriftEvaluators(const ModelSpec& model) : model_(&model) {}

  std::vector<double> m1n(long long n, std::span<const double> x) const;
  double m2n(long long n, std::span<const double> x) const;
  std::vector<double> m1bar(std::span<const double> x) const;
  void m1bar_into(std::span<const double> x, std::span<double> out) const;
  double m2bar(std::span<const double> x) const;

  const ModelSpec& model() const { return *model_; }

 private:
  const ModelSpec* model_;
};

DriftEvaluators limit_drifts(const ModelSpec& model);

/// Grid scan asserting q_j >= -kRateTolerance everywhere (NegativeRate).
void check_rates_nonnegative(const ModelSpec& model, int resolution);

}  // namespace mfcert::model
