#pragma once

// Numerical constants and envelopes for the moment-convergence bound. The
// coupled moment vector z = (x, sum_i x_i^2) obeys z' = g_n(z) along the
// process and z' = gbar(z) in the limit; a Gronwall argument turns the
// drift gap M_n, the initial gap Delta_n and a Lipschitz constant for gbar
// into an explicit envelope dominating ||z_n(t) - zbar(t)||.

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mfcert/grid.hpp"
#include "mfcert/model.hpp"
#include "mfcert/sim.hpp"

namespace mfcert::bounds {

using ScalarFn = std::function<double(std::span<const double>)>;
using VectorFn =
    std::function<void(std::span<const double>, std::span<double>)>;

/// sup over an inset grid of the Hessian spectral radius of f, via central
/// finite differences (step 1e-4 of each axis width) and a cyclic Jacobi
/// eigensolve, times a 1.05 safety factor.
double hessian_bound(const ScalarFn& f, const model::DomainBox& domain,
                     int resolution);

/// sup over an inset grid of the operator 2-norm of the central-difference
/// Jacobian of f, times a 1.05 safety factor.
double lipschitz_estimate(const VectorFn& f, int out_dim,
                          const model::DomainBox& domain, int resolution);
double lipschitz_estimate(const ScalarFn& f, const model::DomainBox& domain,
                          int resolution);

/// M_n: sup over a full domain grid of ||(m1_n - m1bar, m2_n - m2bar)||_2.
double drift_gap(const model::ModelSpec& model, long long n, int resolution);

/// Delta_n = ||(x0_n, sum x0_n^2) - (x0, sum x0^2)||_2.
double initial_gap(std::span<const double> x0_n, std::span<const double> x0);

/// Conservative Lipschitz constant for the limiting moment field gbar:
/// sqrt(k) L_m1bar + L_m2bar + b2 sqrt(1 + 4 k R^2), where R is the largest
/// coordinate magnitude in the domain and V(z) = z2 - sum_j z1j^2 has
/// Lipschitz constant at most sqrt(1 + 4 k R^2).
double gbar_lipschitz_bound(double L_m1bar, double L_m2bar, double b2,
                            const model::DomainBox& domain, int k);

/// e(t) = (Delta + M/L) e^{Lt} - M/L, degenerating to Delta + M t as L -> 0.
struct Envelope {
  double Delta;
  double M;
  double L;
  double operator()(double t) const;
};

std::vector<double> gronwall_envelope(double Delta, double M, double L,
                                      const sim::TimeGrid& grid);

/// Second-order Taylor remainder check on an empirical ensemble:
/// gap = |mean f(Y) - f(mean Y)|, bound = (b/2) sum_i PopVar Y_i, and the
/// recovered curvature ratio h = signed gap / variance sum (0 when the
/// variance sum vanishes). Throws BoundViolated when gap > bound + 1e-12.
struct RemainderCheck {
  double gap;
  double bound;
  double h;
};

RemainderCheck taylor_remainder_check(
    const ScalarFn& f, const std::vector<std::vector<double>>& samples,
    double b);

struct BoundsReport {
  double b2;
  double L_m1bar;
  double L_gbar;
  double Mn;
  double Delta_n;
  int grid_resolution;
  long long n;
};

BoundsReport compute_bounds_report(const model::ModelSpec& model, long long n,
                                   std::span<const double> x0, int resolution);

/// Envelope values on the grid plus the certified constants behind them.
std::pair<std::vector<double>, BoundsReport> theorem_envelope(
    const model::ModelSpec& model, long long n, std::span<const double> x0,
    const sim::TimeGrid& grid, int resolution);

/// Diagnostic residual at interior grid points: centered difference of
/// sumsq minus sum_i 2 (centered difference of mean_i) mean_i, which should
/// shrink with the variance as n grows.
std::vector<double> variance_collapse_check(const sim::EnsembleStats& stats);

/// Per-axis grid resolution giving about 10^4 total points.
int auto_resolution(int k);

}  // namespace mfcert::bounds
