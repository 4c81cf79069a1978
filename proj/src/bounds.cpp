#include "mfcert/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfcert::bounds {

namespace {

constexpr double kSafetyFactor = 1.05;
constexpr double kFdFraction = 1e-4;  // FD step as a fraction of axis width

void validate_resolution(const model::DomainBox& domain, int resolution) {
  if (resolution < 2) throw ConfigError("grid resolution must be >= 2");
  double total = 1.0;
  for (int i = 0; i < domain.dimension(); ++i) total *= resolution;
  if (total > 1e8) throw ConfigError("bounds grid too large");
}

/// Visit every point of the uniform grid with `resolution` points per axis
/// spanning [lower + inset_i, upper - inset_i].
template <class Fn>
void for_each_grid_point(const model::DomainBox& domain, int resolution,
                         const std::vector<double>& inset, Fn&& fn) {
  const int k = domain.dimension();
  std::vector<double> x(static_cast<std::size_t>(k));
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  for (;;) {
    for (int i = 0; i < k; ++i) {
      const double a = domain.lower[i] + inset[i];
      const double b = domain.upper[i] - inset[i];
      x[i] = a + (b - a) * (static_cast<double>(idx[i]) / (resolution - 1));
    }
    fn(std::span<const double>(x));
    int axis = 0;
    while (axis < k && ++idx[axis] == resolution) idx[axis++] = 0;
    if (axis == k) break;
  }
}

/// Largest-magnitude eigenvalue of a symmetric k x k matrix (row-major,
/// destroyed) by cyclic Jacobi rotations.
double jacobi_spectral_radius(std::vector<double>& a, int n) {
  const auto at = [&](int r, int c) -> double& { return a[r * n + c]; };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (int p = 0; p < n; ++p) {
      diag += at(p, p) * at(p, p);
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    }
    if (off <= 1e-30 * std::max(1.0, diag)) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double tau = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int r = 0; r < n; ++r) {
          const double arp = at(r, p), arq = at(r, q);
          at(r, p) = c * arp - s * arq;
          at(r, q) = s * arp + c * arq;
        }
        for (int r = 0; r < n; ++r) {
          const double apr = at(p, r), aqr = at(q, r);
          at(p, r) = c * apr - s * aqr;
          at(q, r) = s * apr + c * aqr;
        }
      }
    }
  }
  double rho = 0.0;
  for (int p = 0; p < n; ++p) rho = std::max(rho, std::abs(at(p, p)));
  return rho;
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFinite(std::string(what) + " is non-finite");
  return v;
}

}  // namespace

double hessian_bound(const ScalarFn& f, const model::DomainBox& domain,
                     int resolution) {
  validate_resolution(domain, resolution);
  const int k = domain.dimension();
  std::vector<double> h(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) h[i] = kFdFraction * domain.width(i);

  std::vector<double> hess(static_cast<std::size_t>(k) * k);
  std::vector<double> xp(static_cast<std::size_t>(k));
  double worst = 0.0;

  for_each_grid_point(domain, resolution, h, [&](std::span<const double> x) {
    const double f0 = checked(f(x), "hessian stencil");
    for (int i = 0; i < k; ++i) {
      std::copy(x.begin(), x.end(), xp.begin());
      xp[i] = x[i] + h[i];
      const double fp = checked(f(xp), "hessian stencil");
      xp[i] = x[i] - h[i];
      const double fm = checked(f(xp), "hessian stencil");
      hess[i * k + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        std::copy(x.begin(), x.end(), xp.begin());
        xp[i] = x[i] + h[i]; xp[j] = x[j] + h[j];
        const double fpp = checked(f(xp), "hessian stencil");
        xp[j] = x[j] - h[j];
        const double fpm = checked(f(xp), "hessian stencil");
        xp[i] = x[i] - h[i]; xp[j] = x[j] + h[j];
        const double fmp = checked(f(xp), "hessian stencil");
        xp[j] = x[j] - h[j];
        const double fmm = checked(f(xp), "hessian stencil");
        const double v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
        hess[i * k + j] = v;
        hess[j * k + i] = v;
      }
    }
    std::vector<double> work = hess;
    worst = std::max(worst, jacobi_spectral_radius(work, k));
  });
  return worst * kSafetyFactor;
}

double lipschitz_estimate(const VectorFn& f, int out_dim,
                          const model::DomainBox& domain, int resolution) {
  validate_resolution(domain, resolution);
  if (out_dim < 1) throw ConfigError("output dimension must be >= 1");
  const int k = domain.dimension();
  std::vector<double> h(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) h[i] = kFdFraction * domain.width(i);

  std::vector<double> jac(static_cast<std::size_t>(out_dim) * k);
  std::vector<double> gram(static_cast<std::size_t>(k) * k);
  std::vector<double> xp(static_cast<std::size_t>(k));
  std::vector<double> fp(static_cast<std::size_t>(out_dim));
  std::vector<double> fm(static_cast<std::size_t>(out_dim));
  double worst = 0.0;

  for_each_grid_point(domain, resolution, h, [&](std::span<const double> x) {
    for (int i = 0; i < k; ++i) {
      std::copy(x.begin(), x.end(), xp.begin());
      xp[i] = x[i] + h[i];
      f(xp, fp);
      xp[i] = x[i] - h[i];
      f(xp, fm);
      for (int r = 0; r < out_dim; ++r) {
        checked(fp[r], "jacobian stencil");
        checked(fm[r], "jacobian stencil");
        jac[r * k + i] = (fp[r] - fm[r]) / (2.0 * h[i]);
      }
    }
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        double g = 0.0;
        for (int r = 0; r < out_dim; ++r) g += jac[r * k + i] * jac[r * k + j];
        gram[i * k + j] = g;
      }
    std::vector<double> work = gram;
    const double lambda = jacobi_spectral_radius(work, k);
    worst = std::max(worst, std::sqrt(std::max(0.0, lambda)));
  });
  return worst * kSafetyFactor;
}

double lipschitz_estimate(const ScalarFn& f, const model::DomainBox& domain,
                          int resolution) {
  return lipschitz_estimate(
      [&f](std::span<const double> x, std::span<double> out) { out[0] = f(x); },
      1, domain, resolution);
}

double drift_gap(const model::ModelSpec& model, long long n, int resolution) {
  if (n < 1) throw ConfigError("population size n must be >= 1");
  validate_resolution(model.domain, resolution);
  const model::DriftEvaluators drifts(model);
  const std::vector<double> no_inset(static_cast<std::size_t>(model.k), 0.0);
  double worst = 0.0;
  for_each_grid_point(
      model.domain, resolution, no_inset, [&](std::span<const double> x) {
        const std::vector<double> a = drifts.m1n(n, x);
        const std::vector<double> b = drifts.m1bar(x);
        double norm2 = 0.0;
        for (int i = 0; i < model.k; ++i) {
          const double d = a[i] - b[i];
          norm2 += d * d;
        }
        const double d2 = drifts.m2n(n, x) - drifts.m2bar(x);
        norm2 += d2 * d2;
        worst = std::max(worst, norm2);
      });
  return std::sqrt(worst);
}

double initial_gap(std::span<const double> x0_n, std::span<const double> x0) {
  if (x0_n.size() != x0.size())
    throw GridMismatch("initial states have different dimensions");
  double norm2 = 0.0;
  double sq_n = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double d = x0_n[i] - x0[i];
    norm2 += d * d;
    sq_n += x0_n[i] * x0_n[i];
    sq += x0[i] * x0[i];
  }
  const double dq = sq_n - sq;
  return std::sqrt(norm2 + dq * dq);
}

double gbar_lipschitz_bound(double L_m1bar, double L_m2bar, double b2,
                            const model::DomainBox& domain, int k) {
  if (k < 1 || domain.dimension() != k)
    throw ConfigError("domain dimension does not match k");
  const double r = domain.max_coordinate_magnitude();
  return std::sqrt(static_cast<double>(k)) * L_m1bar + L_m2bar +
         b2 * std::sqrt(1.0 + 4.0 * static_cast<double>(k) * r * r);
}

double Envelope::operator()(double t) const {
  if (L < 1e-12) return Delta + M * t;
  // (Delta + M/L) e^{Lt} - M/L, written so that e(0) = Delta exactly
  return std::exp(L * t) * Delta + M * std::expm1(L * t) / L;
}

std::vector<double> gronwall_envelope(double Delta, double M, double L,
                                      const sim::TimeGrid& grid) {
  if (Delta < 0.0 || M < 0.0 || L < 0.0)
    throw ConfigError("envelope constants must be nonnegative");
  const Envelope env{Delta, M, L};
  std::vector<double> out(static_cast<std::size_t>(grid.points));
  for (int p = 0; p < grid.points; ++p)
    out[static_cast<std::size_t>(p)] = env(grid.time(p));
  return out;
}

RemainderCheck taylor_remainder_check(
    const ScalarFn& f, const std::vector<std::vector<double>>& samples,
    double b) {
  if (samples.empty()) throw ConfigError("need at least one sample");
  const std::size_t k = samples.front().size();
  for (const auto& s : samples)
    if (s.size() != k) throw GridMismatch("samples have mixed dimensions");
  const double count = static_cast<double>(samples.size());

  std::vector<double> mean(k, 0.0);
  for (const auto& s : samples)
    for (std::size_t i = 0; i < k; ++i) mean[i] += s[i];
  for (std::size_t i = 0; i < k; ++i) mean[i] /= count;

  double varsum = 0.0;
  for (const auto& s : samples)
    for (std::size_t i = 0; i < k; ++i) {
      const double d = s[i] - mean[i];
      varsum += d * d;
    }
  varsum /= count;  // population variance

  double f_mean_of = 0.0;
  for (const auto& s : samples) f_mean_of += f(s);
  f_mean_of /= count;
  const double f_at_mean = f(mean);

  const double signed_gap = f_mean_of - f_at_mean;
  const double gap = std::abs(signed_gap);
  const double bound = 0.5 * b * varsum;
  const double h = varsum > 0.0 ? signed_gap / varsum : 0.0;
  if (gap > bound + 1e-12)
    throw BoundViolated("remainder gap " + std::to_string(gap) +
                        " exceeds bound " + std::to_string(bound));
  return RemainderCheck{gap, bound, h};
}

BoundsReport compute_bounds_report(const model::ModelSpec& model, long long n,
                                   std::span<const double> x0, int resolution) {
  if (n < 1) throw ConfigError("population size n must be >= 1");
  if (!model.in_domain(x0))
    throw OutOfDomain("initial state outside the domain box");
  const model::DriftEvaluators drifts(model);

  double b2 = 0.0;
  for (int i = 0; i < model.k; ++i) {
    const ScalarFn component = [&drifts, n, i](std::span<const double> x) {
      return drifts.m1n(n, x)[static_cast<std::size_t>(i)];
    };
    b2 = std::max(b2, hessian_bound(component, model.domain, resolution));
  }
  const ScalarFn second = [&drifts, n](std::span<const double> x) {
    return drifts.m2n(n, x);
  };
  b2 = std::max(b2, hessian_bound(second, model.domain, resolution));

  const VectorFn first_limit = [&drifts](std::span<const double> x,
                                         std::span<double> out) {
    drifts.m1bar_into(x, out);
  };
  const double L_m1bar =
      lipschitz_estimate(first_limit, model.k, model.domain, resolution);
  const ScalarFn second_limit = [&drifts](std::span<const double> x) {
    return drifts.m2bar(x);
  };
  const double L_m2bar =
      lipschitz_estimate(second_limit, model.domain, resolution);

  const double L_gbar =
      gbar_lipschitz_bound(L_m1bar, L_m2bar, b2, model.domain, model.k);
  const double Mn = drift_gap(model, n, resolution);

  // The chain starts on the 1/n lattice, so the initial moment gap is taken
  // against the nearest lattice point rather than x0 itself.
  std::vector<double> x0_n(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double m = static_cast<double>(
        std::llround((x0[i] - model.domain.lower[i]) * static_cast<double>(n)));
    x0_n[i] = model.domain.lower[i] + m / static_cast<double>(n);
  }
  const double Delta_n = initial_gap(x0_n, x0);

  return BoundsReport{b2, L_m1bar, L_gbar, Mn, Delta_n, resolution, n};
}

std::pair<std::vector<double>, BoundsReport> theorem_envelope(
    const model::ModelSpec& model, long long n, std::span<const double> x0,
    const sim::TimeGrid& grid, int resolution) {
  const BoundsReport report = compute_bounds_report(model, n, x0, resolution);
  return {gronwall_envelope(report.Delta_n, report.Mn, report.L_gbar, grid),
          report};
}

std::vector<double> variance_collapse_check(const sim::EnsembleStats& stats) {
  if (stats.replicas < 2)
    throw ConfigError("variance collapse check needs at least 2 replicas");
  if (stats.grid.points < 3)
    throw GridMismatch("variance collapse check needs at least 3 grid points");
  const double dt = stats.grid.dt();
  std::vector<double> residual(static_cast<std::size_t>(stats.grid.points - 2));
  for (int p = 1; p + 1 < stats.grid.points; ++p) {
    const double dsumsq =
        (stats.sumsq[static_cast<std::size_t>(p + 1)] -
         stats.sumsq[static_cast<std::size_t>(p - 1)]) /
        (2.0 * dt);
    const auto prev = stats.mean_at(p - 1);
    const auto here = stats.mean_at(p);
    const auto next = stats.mean_at(p + 1);
    double coupled = 0.0;
    for (int i = 0; i < stats.k; ++i)
      coupled += 2.0 * ((next[i] - prev[i]) / (2.0 * dt)) * here[i];
    residual[static_cast<std::size_t>(p - 1)] = dsumsq - coupled;
  }
  return residual;
}

int auto_resolution(int k) {
  const double per_axis = std::pow(1e4, 1.0 / std::max(1, k));
  const int res = static_cast<int>(std::llround(per_axis));
  return std::clamp(res, 2, 10000);
}

}  // namespace mfcert::bounds
