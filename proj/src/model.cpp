#include "mfcert/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace mfcert::model {

bool DomainBox::contains(std::span<const double> x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  return true;
}

double DomainBox::max_coordinate_magnitude() const {
  double r = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i)
    r = std::max(r, std::max(std::abs(lower[i]), std::abs(upper[i])));
  return r;
}

void DomainBox::validate() const {
  if (lower.empty() || lower.size() != upper.size())
    throw SchemaError("domain lower/upper must be non-empty and equal length");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw SchemaError("domain bounds must be finite");
    if (!(lower[i] < upper[i]))
      throw SchemaError("domain requires lower < upper in every coordinate");
  }
}

double ModelSpec::rate(std::size_t j, std::span<const double> x) const {
  const double q = jumps[j].compiled_rate.eval(x);
  if (q < 0.0) {
    if (q >= -kRateTolerance) return 0.0;
    throw NegativeRate("rate of jump " + std::to_string(j) +
                       " evaluated to " + std::to_string(q));
  }
  return q;
}

ModelSpec make_model(
    int k, std::map<std::string, double> params, DomainBox domain,
    const std::vector<std::pair<std::vector<long long>, std::string>>& jumps) {
  if (k < 1 || k > 64) throw SchemaError("k must be in [1, 64]");
  domain.validate();
  if (domain.dimension() != k)
    throw SchemaError("domain dimension does not match k");
  expr::SymbolTable symbols(k, params);
  if (jumps.empty()) throw EmptyJumps();

  std::vector<JumpSpec> built;
  built.reserve(jumps.size());
  for (const auto& [delta, source] : jumps) {
    if (static_cast<int>(delta.size()) != k)
      throw SchemaError("jump delta arity does not match k");
    if (std::all_of(delta.begin(), delta.end(),
                    [](long long d) { return d == 0; }))
      throw SchemaError("jump delta must be nonzero");
    JumpSpec jump;
    jump.delta = delta;
    jump.rate = expr::parse_expression(source, symbols);
    jump.compiled_rate = expr::compile(jump.rate, symbols);
    jump.delta_real.assign(delta.begin(), delta.end());
    for (double d : jump.delta_real) jump.delta_norm2 += d * d;
    built.push_back(std::move(jump));
  }
  return ModelSpec{k, std::move(params), std::move(domain), std::move(built),
                   std::move(symbols)};
}

ModelSpec load_model(const std::string& document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model document is not valid JSON: ") +
                      e.what());
  }
  if (!doc.is_object()) throw SchemaError("model document must be an object");
  for (const char* field : {"k", "domain", "params", "jumps"})
    if (!doc.contains(field))
      throw SchemaError(std::string("model document missing field '") + field +
                        "'");

  if (!doc["k"].is_number_integer())
    throw SchemaError("field 'k' must be an integer");
  const int k = doc["k"].get<int>();

  const auto& dom = doc["domain"];
  if (!dom.is_object() || !dom.contains("lower") || !dom.contains("upper") ||
      !dom["lower"].is_array() || !dom["upper"].is_array())
    throw SchemaError("field 'domain' must hold 'lower' and 'upper' arrays");
  DomainBox box;
  for (const auto& v : dom["lower"]) {
    if (!v.is_number()) throw SchemaError("domain bounds must be numbers");
    box.lower.push_back(v.get<double>());
  }
  for (const auto& v : dom["upper"]) {
    if (!v.is_number()) throw SchemaError("domain bounds must be numbers");
    box.upper.push_back(v.get<double>());
  }

  if (!doc["params"].is_object())
    throw SchemaError("field 'params' must be an object");
  std::map<std::string, double> params;
  for (const auto& [name, value] : doc["params"].items()) {
    if (!value.is_number())
      throw SchemaError("parameter '" + name + "' must be a number");
    params[name] = value.get<double>();
  }

  if (!doc["jumps"].is_array())
    throw SchemaError("field 'jumps' must be an array");
  std::vector<std::pair<std::vector<long long>, std::string>> jumps;
  for (const auto& j : doc["jumps"]) {
    if (!j.is_object() || !j.contains("delta") || !j.contains("rate") ||
        !j["delta"].is_array() || !j["rate"].is_string())
      throw SchemaError("each jump needs a 'delta' array and a 'rate' string");
    std::vector<long long> delta;
    for (const auto& d : j["delta"]) {
      if (!d.is_number_integer())
        throw SchemaError("jump delta entries must be integers");
      delta.push_back(d.get<long long>());
    }
    jumps.emplace_back(std::move(delta), j["rate"].get<std::string>());
  }

  return make_model(k, std::move(params), std::move(box), jumps);
}

namespace {

double require_param(const std::map<std::string, double>& params,
                     const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw MissingParam(name);
  return it->second;
}

void reject_extras(const std::map<std::string, double>& params,
                   std::initializer_list<const char*> known) {
  for (const auto& [name, value] : params) {
    (void)value;
    bool ok = false;
    for (const char* want : known) ok = ok || name == want;
    if (!ok) throw SchemaError("unexpected parameter '" + name + "'");
  }
}

}  // namespace

ModelSpec builtin(const std::string& name,
                  const std::map<std::string, double>& params) {
  if (name == "sis") {
    reject_extras(params, {"beta", "gamma"});
    require_param(params, "beta");
    require_param(params, "gamma");
    return make_model(1, params, DomainBox{{0.0}, {1.0}},
                      {{{+1}, "beta*x1*(1-x1)"}, {{-1}, "gamma*x1"}});
  }
  if (name == "bipartite_si") {
    reject_extras(params, {"bm", "bf"});
    require_param(params, "bm");
    require_param(params, "bf");
    // coordinates: x1 = susceptible males, x2 = infected males,
    //              x3 = susceptible females, x4 = infected females
    return make_model(4, params,
                      DomainBox{{0.0, 0.0, 0.0, 0.0}, {1.0, 1.0, 1.0, 1.0}},
                      {{{-1, +1, 0, 0}, "bm*x4*x1"},
                       {{0, 0, -1, +1}, "bf*x2*x3"}});
  }
  if (name == "pure_death") {
    reject_extras(params, {"gamma"});
    require_param(params, "gamma");
    return make_model(1, params, DomainBox{{0.0}, {1.0}},
                      {{{-1}, "gamma*x1"}});
  }
  throw UnknownModel(name);
}

std::vector<double> drift_m1(const ModelSpec& model, long long n,
                             std::span<const double> x) {
  if (n < 1) throw ConfigError("population size n must be >= 1");
  if (!model.in_domain(x)) throw OutOfDomain("state outside the domain box");
  return DriftEvaluators(model).m1n(n, x);
}

double drift_m2(const ModelSpec& model, long long n,
                std::span<const double> x) {
  if (n < 1) throw ConfigError("population size n must be >= 1");
  if (!model.in_domain(x)) throw OutOfDomain("state outside the domain box");
  return DriftEvaluators(model).m2n(n, x);
}

std::vector<double> DriftEvaluators::m1n(long long n,
                                         std::span<const double> x) const {
  (void)n;  // density-dependent family: m1 has no n dependence
  return m1bar(x);
}

double DriftEvaluators::m2n(long long n, std::span<const double> x) const {
  const ModelSpec& m = *model_;
  double total = 0.0;
  for (std::size_t j = 0; j < m.jumps.size(); ++j) {
    const JumpSpec& jump = m.jumps[j];
    const double q = m.rate(j, x);
    double dot = 0.0;
    for (int i = 0; i < m.k; ++i) dot += jump.delta_real[i] * x[i];
    total += q * (2.0 * dot + jump.delta_norm2 / static_cast<double>(n));
  }
  return total;
}

std::vector<double> DriftEvaluators::m1bar(std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(model_->k), 0.0);
  m1bar_into(x, out);
  return out;
}

void DriftEvaluators::m1bar_into(std::span<const double> x,
                                 std::span<double> out) const {
  const ModelSpec& m = *model_;
  for (int i = 0; i < m.k; ++i) out[i] = 0.0;
  for (std::size_t j = 0; j < m.jumps.size(); ++j) {
    const double q = m.rate(j, x);
    const JumpSpec& jump = m.jumps[j];
    for (int i = 0; i < m.k; ++i) out[i] += q * jump.delta_real[i];
  }
}

double DriftEvaluators::m2bar(std::span<const double> x) const {
  const std::vector<double> v = m1bar(x);
  double total = 0.0;
  for (int i = 0; i < model_->k; ++i) total += 2.0 * v[i] * x[i];
  return total;
}

DriftEvaluators limit_drifts(const ModelSpec& model) {
  return DriftEvaluators(model);
}

void check_rates_nonnegative(const ModelSpec& model, int resolution) {
  if (resolution < 2) throw ConfigError("grid resolution must be >= 2");
  const int k = model.k;
  double total_points = 1.0;
  for (int i = 0; i < k; ++i) total_points *= resolution;
  if (total_points > 1e8) throw ConfigError("rate-scan grid too large");

  std::vector<double> x(static_cast<std::size_t>(k));
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  for (;;) {
    for (int i = 0; i < k; ++i)
      x[i] = model.domain.lower[i] +
             model.domain.width(i) * (static_cast<double>(idx[i]) / (resolution - 1));
    for (std::size_t j = 0; j < model.jumps.size(); ++j) model.rate(j, x);
    int axis = 0;
    while (axis < k && ++idx[axis] == resolution) idx[axis++] = 0;
    if (axis == k) break;
  }
}

}  // namespace mfcert::model
