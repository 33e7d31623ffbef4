#ifndef POLAR_EXPERIMENTS_HPP
#define POLAR_EXPERIMENTS_HPP

#include "polar/engine.hpp"
#include "polar/model.hpp"
#include "polar/rng.hpp"
#include "polar/stats.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace polar {

struct ExperimentSpec {
  std::vector<std::pair<int, double>> grid;  // (N, beta)
  std::vector<PressureList> starts;
  std::uint64_t replications = 1000;
  std::uint64_t master_seed = 0;
  Scheme scheme = Scheme::direct;
  StopCondition budget;  // per-replication bounds; max_events defaults to 1e8
  double delta = 0.5;
};

// Runs `task(index, rng)` for index = 0..n-1 on a pool of threads, each with
// its own derived stream; results are positional, so the merge is identical
// for any worker count. A failing replication aborts the experiment with its
// index in the message.
template <typename F>
auto run_replications(std::uint64_t n, std::uint64_t master_seed, F&& task) {
  using Result = decltype(task(std::uint64_t{0}, std::declval<Rng&>()));
  std::vector<Result> results(n);
  if (n == 0) return results;
  const unsigned workers =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                      static_cast<unsigned>(std::min<std::uint64_t>(n, 64))));
  std::atomic<std::uint64_t> cursor{0};
  std::atomic<std::int64_t> failed{-1};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint64_t i = cursor.fetch_add(1);
        if (i >= n || failed.load() >= 0) return;
        try {
          Rng rng = Rng::stream(master_seed, i);
          results[i] = task(i, rng);
        } catch (...) {
          failed.store(static_cast<std::int64_t>(i));
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load() >= 0)
    throw std::runtime_error("replication " + std::to_string(failed.load()) + " failed");
  return results;
}

struct OccupationRow {
  int n_actors = 0;
  double beta = 0.0;
  double observed_time = 0.0;  // after burn-in
  std::uint64_t events = 0;
  // Time fractions per class key: zero, ladder_plus, ladder_minus,
  // consensus_plus, consensus_minus, ladder, other.
  std::map<std::string, double> fraction;
  std::map<std::string, double> stderr_;  // batch means, 20 batches
  // Time-weighted per-state fractions (key = comma-joined pressures).
  std::map<std::string, double> state_fraction;
};

// Time-weighted class occupation over one long run; the first 10% of the
// event budget is burn-in.
OccupationRow occupation_run(const ModelParams& p, const PressureList& u0,
                             std::uint64_t total_events, Scheme scheme, Rng& rng);

std::vector<OccupationRow> occupation_experiment(const ExperimentSpec& spec);

struct ConsensusRow {
  int n_actors = 0;
  double beta = 0.0;
  PressureList start;
  double threshold = 0.0;  // e^{-beta(1-delta)}; plus Exp(2N) allowance at 0
  WilsonInterval tail;     // P(R(L) > threshold)
  std::uint64_t censored = 0;
  SampleSummary times;
  std::vector<double> samples;  // uncensored hitting times, replication order
};

std::vector<ConsensusRow> consensus_time_experiment(const ExperimentSpec& spec);

struct MetastabilityResult {
  int n_actors = 0;
  double beta = 0.0;
  PressureList start;
  TargetClass target = TargetClass::ladder_minus;
  double c_hat = 0.0;  // empirical (1 - e^{-1}) quantile
  double c_lower_bound = 0.0;
  bool bound_ok = false;
  bool ks_valid = false;  // false when any replication was censored
  SampleSummary summary;
  std::vector<double> samples;
  std::uint64_t censored = 0;
};

MetastabilityResult metastability_run(const ModelParams& p, const PressureList& start,
                                      TargetClass target, std::uint64_t replications,
                                      std::uint64_t master_seed, Scheme scheme,
                                      const StopCondition& budget);

std::vector<MetastabilityResult> metastability_experiment(const ExperimentSpec& spec);

// Lower bound on c_beta: ((N-1) e^{-beta} + lambda_beta)^{-1} with
// lambda_beta = 2 (N-1) / ((N-1) + e^{beta}).
double c_beta_lower_bound(const ModelParams& p);
double lambda_beta(const ModelParams& p);

struct MEventRow {
  int n_actors = 0;
  double beta = 0.0;
  PressureList start;
  int m = 0;
  WilsonInterval estimate;  // P(first m events are admissible-move events)
  double zeta_power_m = 0.0;
  bool bound_ok = false;  // estimate within CI of the zeta^m lower bound
};

std::vector<MEventRow> m_event_probability_experiment(const ExperimentSpec& spec, int m);

}  // namespace polar

#endif  // POLAR_EXPERIMENTS_HPP
