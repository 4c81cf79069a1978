#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mfcert/grid.hpp"
#include "mfcert/model.hpp"

namespace mfcert::ode {

struct IvpProblem {
  int dimension;
  std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>
      rhs;
  double t0;
  double t_end;
  std::vector<double> x0;
};

/// Grid-sampled trajectory; times are t0 + grid.time(i). Dense evaluation
/// interpolates linearly between recorded points.
struct OdeSolution {
  sim::TimeGrid grid;
  double t0;
  int dimension;
  std::vector<double> states;  // [point][dimension]

  std::span<const double> state(int i) const {
    return {states.data() + static_cast<std::size_t>(i) * dimension,
            static_cast<std::size_t>(dimension)};
  }
  double time(int i) const { return t0 + grid.time(i); }
  std::vector<double> eval(double t) const;
};

/// Classical fixed-step RK4. The step count is ceil(duration/step); when the
/// requested step does not divide the duration the internal steps are
/// equalized at duration/nsteps <= step so the recorded grid stays uniform
/// and lands exactly on t_end.
OdeSolution integrate_ivp(const IvpProblem& problem, double step);

/// RK4 recorded on a caller-supplied grid, substepping each interval with
/// steps no longer than max_substep.
OdeSolution integrate_on_grid(const IvpProblem& problem,
                              const sim::TimeGrid& grid, double max_substep);

/// Mean-field IVP x' = m1bar(x), x(0) = x0.
OdeSolution meanfield_trajectory(const model::ModelSpec& model,
                                 std::span<const double> x0, double t_end,
                                 double step);

OdeSolution meanfield_on_grid(const model::ModelSpec& model,
                              std::span<const double> x0,
                              const sim::TimeGrid& grid, double ode_step);

/// Append the scalar sum_i x_i(t)^2 as coordinate k+1, turning a mean-field
/// trajectory into the limiting moment trajectory zbar.
OdeSolution reference_moment_trajectory(const OdeSolution& meanfield);

}  // namespace mfcert::ode
