#pragma once

// Exact stochastic simulation of the scaled jump process. Replica r of an
// ensemble draws from rng::Stream(substream_seed(master, r)); ensemble
// moments are reduced over fixed-size replica blocks in ascending order, so
// results are bit-identical for any thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "mfcert/grid.hpp"
#include "mfcert/model.hpp"
#include "mfcert/ode.hpp"

namespace mfcert::sim {

struct RngSeed {
  std::uint64_t master;
};

/// One trajectory sampled on a grid, right-continuously: the value at grid
/// time t is the state after the last event at time <= t.
struct PathSample {
  TimeGrid grid;
  int k;
  std::vector<double> states;  // [point][k]

  std::span<const double> state(int i) const {
    return {states.data() + static_cast<std::size_t>(i) * k,
            static_cast<std::size_t>(k)};
  }
};

struct EnsembleStats {
  TimeGrid grid;
  int k;
  long long replicas;
  std::vector<double> mean;     // [point][k]
  std::vector<double> se_mean;  // [point][k]
  std::vector<double> sumsq;    // [point], estimate of E sum_i X_i^2
  std::vector<double> varsum;   // [point], sum_i Var X_i (unbiased, clamped)
  std::vector<double> se_sumsq; // [point]

  std::span<const double> mean_at(int p) const {
    return {mean.data() + static_cast<std::size_t>(p) * k,
            static_cast<std::size_t>(k)};
  }
  std::span<const double> se_mean_at(int p) const {
    return {se_mean.data() + static_cast<std::size_t>(p) * k,
            static_cast<std::size_t>(k)};
  }
  double se_mean_max(int p) const;
};

/// Stats plus every replica's grid states (for sample-functional checks).
struct EnsembleRun {
  EnsembleStats stats;
  std::vector<double> states;  // [replica][point][k]

  std::span<const double> state(long long replica, int point) const {
    const auto k = static_cast<std::size_t>(stats.k);
    return {states.data() +
                (static_cast<std::size_t>(replica) * stats.grid.points +
                 static_cast<std::size_t>(point)) *
                    k,
            k};
  }
};

PathSample simulate_path(const model::ModelSpec& model, long long n,
                         std::span<const double> x0, const TimeGrid& grid,
                         RngSeed seed);

EnsembleStats run_ensemble(const model::ModelSpec& model, long long n,
                           std::span<const double> x0, const TimeGrid& grid,
                           long long replicas, RngSeed seed, int threads = 0);

EnsembleRun run_ensemble_retained(const model::ModelSpec& model, long long n,
                                  std::span<const double> x0,
                                  const TimeGrid& grid, long long replicas,
                                  RngSeed seed, int threads = 0);

/// Pointwise E||X_n(t) - xbar(t)||^2 estimate: varsum(t) + ||mean - xbar||^2.
std::vector<double> mse_vs_reference(const EnsembleStats& stats,
                                     const ode::OdeSolution& reference);

}  // namespace mfcert::sim
