#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "mfcert/model.hpp"
#include "mfcert/ode.hpp"

using namespace mfcert;
using namespace mfcert::ode;

namespace {

constexpr double kExpMinusOne = 0.36787944117144233;

IvpProblem decay_problem(double t_end = 1.0) {
  IvpProblem p;
  p.dimension = 1;
  p.rhs = [](double, std::span<const double> x, std::span<double> dxdt) {
    dxdt[0] = -x[0];
  };
  p.t0 = 0.0;
  p.t_end = t_end;
  p.x0 = {1.0};
  return p;
}

}  // namespace

TEST_CASE("fixed-step rk4 integrates exponential decay") {
  const OdeSolution sol = integrate_ivp(decay_problem(), 1e-3);
  CHECK(sol.grid.points == 1001);
  CHECK(sol.time(1000) == 1.0);
  CHECK(std::abs(sol.state(1000)[0] - kExpMinusOne) <= 1e-8);
}

TEST_CASE("zero rhs keeps the state bit for bit") {
  IvpProblem p;
  p.dimension = 2;
  p.rhs = [](double, std::span<const double>, std::span<double> dxdt) {
    dxdt[0] = 0.0;
    dxdt[1] = 0.0;
  };
  p.t0 = 0.0;
  p.t_end = 3.0;
  p.x0 = {0.7, -0.2};
  const OdeSolution sol = integrate_ivp(p, 0.1);
  for (int i = 0; i < sol.grid.points; ++i) {
    CHECK(sol.state(i)[0] == 0.7);
    CHECK(sol.state(i)[1] == -0.2);
  }
}

TEST_CASE("global error scales like the fourth power of the step") {
  const double err_h =
      std::abs(integrate_ivp(decay_problem(), 1e-2).state(100)[0] -
               kExpMinusOne);
  const double err_h2 =
      std::abs(integrate_ivp(decay_problem(), 5e-3).state(200)[0] -
               kExpMinusOne);
  const double ratio = err_h / err_h2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("steps are equalized so the grid lands on t_end") {
  const OdeSolution sol = integrate_ivp(decay_problem(), 0.3);
  CHECK(sol.grid.points == 5);
  CHECK(sol.grid.dt() == 0.25);
  CHECK(sol.time(4) == 1.0);
  CHECK(std::abs(sol.state(4)[0] - kExpMinusOne) <= 1e-3);

  CHECK(integrate_ivp(decay_problem(), 2.0).grid.points == 2);
  // A step that divides the span exactly must not gain a spurious step.
  CHECK(integrate_ivp(decay_problem(), 0.25).grid.points == 5);
}

TEST_CASE("grid-recorded integration matches the closed form") {
  const sim::TimeGrid grid(2.0, 9);
  const OdeSolution sol = integrate_on_grid(decay_problem(2.0), grid, 1e-3);
  CHECK(sol.grid == grid);
  for (int p = 0; p < grid.points; ++p)
    CHECK(std::abs(sol.state(p)[0] - std::exp(-sol.time(p))) <= 1e-10);

  const OdeSolution coarse = integrate_on_grid(decay_problem(2.0), grid, 0.3);
  for (int p = 0; p < grid.points; ++p)
    CHECK(std::abs(coarse.state(p)[0] - std::exp(-coarse.time(p))) <= 1e-3);
}

TEST_CASE("dense evaluation interpolates between recorded points") {
  const OdeSolution sol = integrate_ivp(decay_problem(), 0.25);
  CHECK(sol.eval(0.5)[0] == sol.state(2)[0]);
  CHECK(sol.eval(-3.0)[0] == sol.state(0)[0]);
  CHECK(sol.eval(7.0)[0] == sol.state(4)[0]);

  const double a = sol.state(1)[0];
  const double b = sol.state(2)[0];
  CHECK(sol.eval(0.375)[0] == a + 0.5 * (b - a));
  CHECK(std::abs(sol.eval(0.375)[0] - std::exp(-0.375)) <= 1e-2);
}

TEST_CASE("a shifted start time offsets the recorded grid") {
  IvpProblem p = decay_problem();
  p.t0 = 2.0;
  p.t_end = 3.0;
  const OdeSolution sol = integrate_ivp(p, 1e-3);
  CHECK(sol.time(0) == 2.0);
  CHECK(sol.time(sol.grid.points - 1) == 3.0);
  CHECK(sol.eval(1.5)[0] == 1.0);
  CHECK(std::abs(sol.state(sol.grid.points - 1)[0] - kExpMinusOne) <= 1e-8);
}

TEST_CASE("ivp validation") {
  IvpProblem p = decay_problem();
  p.dimension = 0;
  CHECK_THROWS_AS(integrate_ivp(p, 0.1), ConfigError);

  p = decay_problem();
  p.x0 = {1.0, 2.0};
  CHECK_THROWS_AS(integrate_ivp(p, 0.1), ConfigError);

  p = decay_problem();
  p.t_end = p.t0;
  CHECK_THROWS_AS(integrate_ivp(p, 0.1), ConfigError);

  p = decay_problem();
  p.rhs = nullptr;
  CHECK_THROWS_AS(integrate_ivp(p, 0.1), ConfigError);

  CHECK_THROWS_AS(integrate_ivp(decay_problem(), 0.0), ConfigError);
  CHECK_THROWS_AS(integrate_ivp(decay_problem(), -1.0), ConfigError);
  CHECK_THROWS_AS(integrate_ivp(decay_problem(), 1e-9), ConfigError);

  p = decay_problem();
  p.x0 = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(integrate_ivp(p, 0.1), NonFinite);
}

TEST_CASE("non-finite states are reported") {
  IvpProblem p = decay_problem();
  p.rhs = [](double, std::span<const double>, std::span<double> dxdt) {
    dxdt[0] = std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(integrate_ivp(p, 0.1), NonFinite);
}

TEST_CASE("sis mean field follows the logistic curve") {
  const model::ModelSpec m =
      model::builtin("sis", {{"beta", 2.0}, {"gamma", 1.0}});
  const std::vector<double> x0 = {0.1};
  const OdeSolution sol = meanfield_trajectory(m, x0, 1.0, 1e-3);
  CHECK(sol.state(0)[0] == 0.1);
  CHECK(std::abs(sol.state(sol.grid.points - 1)[0] - 0.20230483759584486) <=
        1e-9);
}

TEST_CASE("zero initial infection stays at zero") {
  const model::ModelSpec m =
      model::builtin("sis", {{"beta", 2.0}, {"gamma", 1.0}});
  const std::vector<double> x0 = {0.0};
  const OdeSolution sol = meanfield_trajectory(m, x0, 2.0, 1e-2);
  for (int p = 0; p < sol.grid.points; ++p) CHECK(sol.state(p)[0] == 0.0);
}

TEST_CASE("symmetric bipartite parameters keep the sexes in lockstep") {
  const model::ModelSpec m =
      model::builtin("bipartite_si", {{"bm", 1.5}, {"bf", 1.5}});
  const std::vector<double> x0 = {0.9, 0.1, 0.9, 0.1};
  const OdeSolution sol = meanfield_trajectory(m, x0, 2.0, 1e-3);
  for (int p = 0; p < sol.grid.points; ++p) {
    const auto x = sol.state(p);
    CHECK(std::abs(x[0] - x[2]) <= 1e-12);
    CHECK(std::abs(x[1] - x[3]) <= 1e-12);
  }
}

TEST_CASE("grid-sampled mean field agrees with plain integration") {
  const model::ModelSpec m =
      model::builtin("sis", {{"beta", 2.0}, {"gamma", 1.0}});
  const std::vector<double> x0 = {0.1};
  const sim::TimeGrid grid(1.0, 11);
  const OdeSolution on_grid = meanfield_on_grid(m, x0, grid, 1e-3);
  const OdeSolution plain = meanfield_trajectory(m, x0, 1.0, 1e-3);
  CHECK(on_grid.grid == grid);
  CHECK(std::abs(on_grid.state(10)[0] -
                 plain.state(plain.grid.points - 1)[0]) <= 1e-10);
}

TEST_CASE("mean-field domain checks") {
  const model::ModelSpec m =
      model::builtin("sis", {{"beta", 2.0}, {"gamma", 1.0}});
  const std::vector<double> outside = {1.5};
  CHECK_THROWS_AS(meanfield_trajectory(m, outside, 1.0, 1e-2), OutOfDomain);

  const model::ModelSpec escaping = model::make_model(
      1, {}, model::DomainBox{{0.0}, {1.0}}, {{{1}, "1"}});
  const std::vector<double> x0 = {0.5};
  CHECK_THROWS_AS(meanfield_trajectory(escaping, x0, 1.0, 1e-2), OutOfDomain);
}

TEST_CASE("limiting moment trajectory appends the squared sum") {
  IvpProblem p;
  p.dimension = 2;
  p.rhs = [](double, std::span<const double>, std::span<double> dxdt) {
    dxdt[0] = 0.0;
    dxdt[1] = 0.0;
  };
  p.t0 = 0.0;
  p.t_end = 1.0;
  p.x0 = {0.3, 0.4};
  const OdeSolution sol = integrate_ivp(p, 0.5);
  const OdeSolution z = reference_moment_trajectory(sol);
  CHECK(z.dimension == 3);
  CHECK(z.grid == sol.grid);
  for (int i = 0; i < z.grid.points; ++i) {
    CHECK(z.state(i)[0] == sol.state(i)[0]);
    CHECK(z.state(i)[1] == sol.state(i)[1]);
    CHECK(z.state(i)[2] == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("moment trajectory derivative matches the second drift") {
  const model::ModelSpec m =
      model::builtin("sis", {{"beta", 2.0}, {"gamma", 1.0}});
  const model::DriftEvaluators drifts(m);
  const std::vector<double> x0 = {0.2};
  const OdeSolution sol = meanfield_trajectory(m, x0, 1.0, 1e-2);
  const OdeSolution z = reference_moment_trajectory(sol);
  const double dt = sol.grid.dt();
  for (int p = 1; p + 1 < sol.grid.points; ++p) {
    const double numeric =
        (z.state(p + 1)[1] - z.state(p - 1)[1]) / (2.0 * dt);
    CHECK(std::abs(numeric - drifts.m2bar(sol.state(p))) <= 1e-3);
  }
}
