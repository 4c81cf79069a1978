#include "mfcert/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfcert::ode {

namespace {

constexpr double kStepSlack = 1e-12;

class Rk4Stepper {
 public:
  explicit Rk4Stepper(const IvpProblem& problem)
      : problem_(problem),
        dim_(static_cast<std::size_t>(problem.dimension)),
        k1_(dim_), k2_(dim_), k3_(dim_), k4_(dim_), tmp_(dim_) {}

  void step(double t, double h, std::vector<double>& x) {
    problem_.rhs(t, x, k1_);
    axpy(x, 0.5 * h, k1_);
    problem_.rhs(t + 0.5 * h, tmp_, k2_);
    axpy(x, 0.5 * h, k2_);
    problem_.rhs(t + 0.5 * h, tmp_, k3_);
    axpy(x, h, k3_);
    problem_.rhs(t + h, tmp_, k4_);
    for (std::size_t i = 0; i < dim_; ++i)
      x[i] += (h / 6.0) * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    for (double v : x)
      if (!std::isfinite(v))
        throw NonFinite("ODE state became non-finite near t = " +
                        std::to_string(t + h));
  }

 private:
  void axpy(const std::vector<double>& x, double a,
            const std::vector<double>& k) {
    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = x[i] + a * k[i];
  }

  const IvpProblem& problem_;
  std::size_t dim_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

void validate_problem(const IvpProblem& problem) {
  if (problem.dimension < 1) throw ConfigError("IVP dimension must be >= 1");
  if (static_cast<int>(problem.x0.size()) != problem.dimension)
    throw ConfigError("IVP initial state has wrong dimension");
  if (!(problem.t_end > problem.t0))
    throw ConfigError("IVP requires t_end > t0");
  if (!problem.rhs) throw ConfigError("IVP has no right-hand side");
  for (double v : problem.x0)
    if (!std::isfinite(v)) throw NonFinite("IVP initial state is non-finite");
}

}  // namespace

std::vector<double> OdeSolution::eval(double t) const {
  const double rel = t - t0;
  if (rel <= 0.0) return {states.begin(), states.begin() + dimension};
  if (rel >= grid.t_end)
    return {states.end() - dimension, states.end()};
  const double pos = rel / grid.dt();
  int i = static_cast<int>(pos);
  i = std::min(i, grid.points - 2);
  const double w = (rel - grid.time(i)) / grid.dt();
  std::vector<double> out(static_cast<std::size_t>(dimension));
  const auto a = state(i);
  const auto b = state(i + 1);
  for (int c = 0; c < dimension; ++c) out[c] = a[c] + w * (b[c] - a[c]);
  return out;
}

OdeSolution integrate_ivp(const IvpProblem& problem, double step) {
  validate_problem(problem);
  if (!(step > 0.0)) throw ConfigError("ODE step must be positive");
  const double duration = problem.t_end - problem.t0;
  const long long nsteps = std::max<long long>(
      1, static_cast<long long>(std::ceil(duration / step - kStepSlack)));
  if (nsteps > 50'000'000) throw ConfigError("ODE step too small for span");

  sim::TimeGrid grid(duration, static_cast<int>(nsteps) + 1);
  const double h = duration / static_cast<double>(nsteps);

  OdeSolution sol{grid, problem.t0, problem.dimension, {}};
  sol.states.reserve(static_cast<std::size_t>(grid.points) * problem.dimension);
  std::vector<double> x = problem.x0;
  sol.states.insert(sol.states.end(), x.begin(), x.end());
  Rk4Stepper stepper(problem);
  for (long long s = 0; s < nsteps; ++s) {
    stepper.step(problem.t0 + h * static_cast<double>(s), h, x);
    sol.states.insert(sol.states.end(), x.begin(), x.end());
  }
  return sol;
}

OdeSolution integrate_on_grid(const IvpProblem& problem,
                              const sim::TimeGrid& grid, double max_substep) {
  validate_problem(problem);
  if (!(max_substep > 0.0)) throw ConfigError("ODE step must be positive");

  OdeSolution sol{grid, problem.t0, problem.dimension, {}};
  sol.states.reserve(static_cast<std::size_t>(grid.points) * problem.dimension);
  std::vector<double> x = problem.x0;
  sol.states.insert(sol.states.end(), x.begin(), x.end());
  Rk4Stepper stepper(problem);
  for (int p = 0; p + 1 < grid.points; ++p) {
    const double ta = problem.t0 + grid.time(p);
    const double tb = problem.t0 + grid.time(p + 1);
    const double span = tb - ta;
    const long long nsub = std::max<long long>(
        1, static_cast<long long>(std::ceil(span / max_substep - kStepSlack)));
    const double h = span / static_cast<double>(nsub);
    for (long long s = 0; s < nsub; ++s)
      stepper.step(ta + h * static_cast<double>(s), h, x);
    sol.states.insert(sol.states.end(), x.begin(), x.end());
  }
  return sol;
}

namespace {

IvpProblem meanfield_problem(const model::ModelSpec& model,
                             std::span<const double> x0, double t_end) {
  if (!model.in_domain(x0))
    throw OutOfDomain("mean-field initial state outside the domain box");
  model::DriftEvaluators drifts(model);
  IvpProblem problem;
  problem.dimension = model.k;
  problem.t0 = 0.0;
  problem.t_end = t_end;
  problem.x0.assign(x0.begin(), x0.end());
  problem.rhs = [drifts](double, std::span<const double> x,
                         std::span<double> dxdt) {
    drifts.m1bar_into(x, dxdt);
  };
  return problem;
}

void check_stays_in_domain(const OdeSolution& sol,
                           const model::ModelSpec& model) {
  for (int p = 0; p < sol.grid.points; ++p)
    if (!model.domain.contains(sol.state(p), 1e-9))
      throw OutOfDomain("mean-field trajectory left the domain box near t = " +
                        std::to_string(sol.time(p)));
}

}  // namespace

OdeSolution meanfield_trajectory(const model::ModelSpec& model,
                                 std::span<const double> x0, double t_end,
                                 double step) {
  const IvpProblem problem = meanfield_problem(model, x0, t_end);
  OdeSolution sol = integrate_ivp(problem, step);
  check_stays_in_domain(sol, model);
  return sol;
}

OdeSolution meanfield_on_grid(const model::ModelSpec& model,
                              std::span<const double> x0,
                              const sim::TimeGrid& grid, double ode_step) {
  const IvpProblem problem = meanfield_problem(model, x0, grid.t_end);
  OdeSolution sol = integrate_on_grid(problem, grid, ode_step);
  check_stays_in_domain(sol, model);
  return sol;
}

OdeSolution reference_moment_trajectory(const OdeSolution& meanfield) {
  OdeSolution out{meanfield.grid, meanfield.t0, meanfield.dimension + 1, {}};
  out.states.reserve(static_cast<std::size_t>(out.grid.points) * out.dimension);
  for (int p = 0; p < meanfield.grid.points; ++p) {
    const auto x = meanfield.state(p);
    double sumsq = 0.0;
    for (double v : x) sumsq += v * v;
    out.states.insert(out.states.end(), x.begin(), x.end());
    out.states.push_back(sumsq);
  }
  return out;
}

}  // namespace mfcert::ode
