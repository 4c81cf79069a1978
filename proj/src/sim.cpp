#include "mfcert/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>

#include "mfcert/rng.hpp"

namespace mfcert::sim {

namespace {

constexpr long long kBlockSize = 32;  // replicas per reduction block

/// Initial scaled state as integer lattice counts m, x = lower + m/n.
std::vector<long long> to_lattice(const model::ModelSpec& model, long long n,
                                  std::span<const double> x0) {
  if (n < 1) throw ConfigError("population size n must be >= 1");
  if (static_cast<int>(x0.size()) != model.k)
    throw OffLattice("initial state has wrong dimension");
  if (!model.in_domain(x0))
    throw OffLattice("initial state outside the domain box");
  std::vector<long long> counts(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double scaled = (x0[i] - model.domain.lower[i]) * static_cast<double>(n);
    counts[i] = std::llround(scaled);
    const double back =
        model.domain.lower[i] + static_cast<double>(counts[i]) / static_cast<double>(n);
    if (std::abs(back - x0[i]) > model::kDomainTolerance)
      throw OffLattice("initial coordinate " + std::to_string(i + 1) +
                       " is not on the 1/n lattice for n = " + std::to_string(n));
  }
  return counts;
}

/// SSA over [0, t_end], writing grid samples into out[point*k + i].
void run_path(const model::ModelSpec& model, long long n,
              const std::vector<long long>& counts0, const TimeGrid& grid,
              rng::Stream stream, double* out) {
  const int k = model.k;
  const std::size_t jumps = model.jumps.size();
  const double nd = static_cast<double>(n);

  std::vector<long long> counts = counts0;
  std::vector<double> x(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    x[i] = model.domain.lower[i] + static_cast<double>(counts[i]) / nd;
  std::vector<double> qs(jumps);

  int rec = 0;
  double t = 0.0;
  const auto record_until = [&](double limit) {
    while (rec < grid.points && grid.time(rec) < limit) {
      std::copy(x.begin(), x.end(), out + static_cast<std::size_t>(rec) * k);
      ++rec;
    }
  };

  for (;;) {
    double total = 0.0;
    for (std::size_t j = 0; j < jumps; ++j) {
      qs[j] = model.rate(j, x);
      total += qs[j];
    }

    if (total <= 0.0) {  // absorbing state
      record_until(grid.t_end + 1.0);
      return;
    }

    const double t_next = t + stream.exponential() / (total * nd);
    record_until(t_next);
    if (rec == grid.points) return;

    const double target = stream.uniform01() * total;
    std::size_t pick = jumps;
    double cum = 0.0;
    for (std::size_t j = 0; j < jumps; ++j) {
      cum += qs[j];
      if (target < cum) {
        pick = j;
        break;
      }
    }
    if (pick == jumps) {  // fp edge: fall back to the last active jump
      for (std::size_t j = jumps; j-- > 0;)
        if (qs[j] > 0.0) {
          pick = j;
          break;
        }
    }

    const model::JumpSpec& jump = model.jumps[pick];
    for (int i = 0; i < k; ++i) {
      if (jump.delta[i] == 0) continue;
      counts[i] += jump.delta[i];
      x[i] = model.domain.lower[i] + static_cast<double>(counts[i]) / nd;
      if (x[i] < model.domain.lower[i] - model::kDomainTolerance ||
          x[i] > model.domain.upper[i] + model::kDomainTolerance)
        throw Escape("jump " + std::to_string(pick) +
                     " left the domain box near t = " + std::to_string(t_next));
    }
    t = t_next;
  }
}

// Sums are accumulated as offsets from the initial lattice state, so a
// degenerate grid point where every replica holds the same value (t = 0 in
// particular) reduces to that value exactly, with zero variance.
struct Totals {
  // per grid point: sum d_i, sum d_i^2 (componentwise), sum dq, sum dq^2
  // with d = x - ref and dq = sum_i x_i^2 - ref_q per replica
  std::vector<double> data;

  explicit Totals(std::size_t points, std::size_t k)
      : data(points * (2 * k + 2), 0.0) {}

  double* at(std::size_t point, std::size_t k) {
    return data.data() + point * (2 * k + 2);
  }
};

void accumulate(Totals& acc, const double* path, std::size_t points,
                std::size_t k, const double* ref, double ref_q) {
  for (std::size_t p = 0; p < points; ++p) {
    double* slot = acc.at(p, k);
    const double* xs = path + p * k;
    double q = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double v = xs[i];
      const double d = v - ref[i];
      slot[i] += d;
      slot[k + i] += d * d;
      q += v * v;
    }
    const double dq = q - ref_q;
    slot[2 * k] += dq;
    slot[2 * k + 1] += dq * dq;
  }
}

EnsembleStats finalize(const TimeGrid& grid, int k, long long replicas,
                       Totals& totals, const double* ref, double ref_q) {
  const auto points = static_cast<std::size_t>(grid.points);
  const auto ku = static_cast<std::size_t>(k);
  const double r = static_cast<double>(replicas);

  EnsembleStats stats{grid, k, replicas, {}, {}, {}, {}, {}};
  stats.mean.assign(points * ku, 0.0);
  stats.se_mean.assign(points * ku, 0.0);
  stats.sumsq.assign(points, 0.0);
  stats.varsum.assign(points, 0.0);
  stats.se_sumsq.assign(points, 0.0);

  for (std::size_t p = 0; p < points; ++p) {
    const double* slot = totals.at(p, ku);
    double varsum = 0.0;
    for (std::size_t i = 0; i < ku; ++i) {
      const double sx = slot[i];
      const double sxx = slot[ku + i];
      stats.mean[p * ku + i] = ref[i] + sx / r;
      if (replicas > 1) {
        const double var = std::max(0.0, (sxx - sx * sx / r) / (r - 1.0));
        varsum += var;
        stats.se_mean[p * ku + i] = std::sqrt(var / r);
      }
    }
    stats.varsum[p] = varsum;
    stats.sumsq[p] = ref_q + slot[2 * ku] / r;
    if (replicas > 1) {
      const double sq = slot[2 * ku];
      const double sqq = slot[2 * ku + 1];
      const double varq = std::max(0.0, (sqq - sq * sq / r) / (r - 1.0));
      stats.se_sumsq[p] = std::sqrt(varq / r);
    }
  }
  return stats;
}

EnsembleRun run_ensemble_impl(const model::ModelSpec& model, long long n,
                              std::span<const double> x0, const TimeGrid& grid,
                              long long replicas, RngSeed seed, int threads,
                              bool retain) {
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  const std::vector<long long> counts0 = to_lattice(model, n, x0);
  const auto points = static_cast<std::size_t>(grid.points);
  const auto k = static_cast<std::size_t>(model.k);
  const long long nblocks = (replicas + kBlockSize - 1) / kBlockSize;

  std::vector<double> ref(k);
  for (std::size_t i = 0; i < k; ++i)
    ref[i] = model.domain.lower[i] +
             static_cast<double>(counts0[i]) / static_cast<double>(n);
  double ref_q = 0.0;
  for (std::size_t i = 0; i < k; ++i) ref_q += ref[i] * ref[i];

  EnsembleRun run{EnsembleStats{grid, model.k, replicas, {}, {}, {}, {}, {}},
                  {}};
  if (retain)
    run.states.assign(static_cast<std::size_t>(replicas) * points * k, 0.0);

  std::vector<Totals> blocks(static_cast<std::size_t>(nblocks),
                             Totals(points, k));

  int nthreads = threads > 0
                     ? threads
                     : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::clamp<int>(nthreads, 1, static_cast<int>(
                                              std::min<long long>(nblocks, 64)));

  std::atomic<long long> next_block{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  const auto worker = [&]() {
    std::vector<double> local(points * k);
    try {
      for (;;) {
        const long long b = next_block.fetch_add(1);
        if (b >= nblocks || failed.load()) break;
        const long long lo = b * kBlockSize;
        const long long hi = std::min(replicas, lo + kBlockSize);
        for (long long rep = lo; rep < hi; ++rep) {
          double* dst = retain ? run.states.data() +
                                     static_cast<std::size_t>(rep) * points * k
                               : local.data();
          run_path(model, n, counts0, grid,
                   rng::Stream(rng::substream_seed(seed.master,
                                                   static_cast<std::uint64_t>(rep))),
                   dst);
          accumulate(blocks[static_cast<std::size_t>(b)], dst, points, k,
                     ref.data(), ref_q);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      failed.store(true);
    }
  };

  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  Totals totals(points, k);
  for (const Totals& blk : blocks)
    for (std::size_t i = 0; i < totals.data.size(); ++i)
      totals.data[i] += blk.data[i];

  run.stats = finalize(grid, model.k, replicas, totals, ref.data(), ref_q);
  return run;
}

}  // namespace

double EnsembleStats::se_mean_max(int p) const {
  double m = 0.0;
  for (double v : se_mean_at(p)) m = std::max(m, v);
  return m;
}

PathSample simulate_path(const model::ModelSpec& model, long long n,
                         std::span<const double> x0, const TimeGrid& grid,
                         RngSeed seed) {
  const std::vector<long long> counts0 = to_lattice(model, n, x0);
  PathSample path{grid, model.k, {}};
  path.states.assign(
      static_cast<std::size_t>(grid.points) * static_cast<std::size_t>(model.k),
      0.0);
  run_path(model, n, counts0, grid,
           rng::Stream(rng::substream_seed(seed.master, 0)), path.states.data());
  return path;
}

EnsembleStats run_ensemble(const model::ModelSpec& model, long long n,
                           std::span<const double> x0, const TimeGrid& grid,
                           long long replicas, RngSeed seed, int threads) {
  return run_ensemble_impl(model, n, x0, grid, replicas, seed, threads, false)
      .stats;
}

EnsembleRun run_ensemble_retained(const model::ModelSpec& model, long long n,
                                  std::span<const double> x0,
                                  const TimeGrid& grid, long long replicas,
                                  RngSeed seed, int threads) {
  return run_ensemble_impl(model, n, x0, grid, replicas, seed, threads, true);
}

std::vector<double> mse_vs_reference(const EnsembleStats& stats,
                                     const ode::OdeSolution& reference) {
  if (reference.dimension != stats.k)
    throw GridMismatch("reference dimension does not match ensemble");
  if (!(reference.grid == stats.grid) || reference.t0 != 0.0)
    throw GridMismatch("reference grid does not match ensemble grid");
  std::vector<double> mse(static_cast<std::size_t>(stats.grid.points));
  for (int p = 0; p < stats.grid.points; ++p) {
    const auto mean = stats.mean_at(p);
    const auto ref = reference.state(p);
    double bias2 = 0.0;
    for (int i = 0; i < stats.k; ++i) {
      const double d = mean[i] - ref[i];
      bias2 += d * d;
    }
    mse[static_cast<std::size_t>(p)] = stats.varsum[static_cast<std::size_t>(p)] + bias2;
  }
  return mse;
}

}  // namespace mfcert::sim
