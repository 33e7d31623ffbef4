#ifndef POLAR_ENGINE_HPP
#define POLAR_ENGINE_HPP

#include "polar/model.hpp"
#include "polar/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace polar {

struct EventRecord {
  double time;
  int actor;    // 1-based
  int opinion;  // +1 or -1
};

enum class Scheme { direct, thinning };

enum class TargetClass {
  ladder,
  ladder_plus,
  ladder_minus,
  consensus_plus,
  consensus_minus,
  zero,
};

// Target of a reaching time: a named class or an explicit list.
struct Target {
  std::optional<TargetClass> cls;
  std::optional<PressureList> list;

  bool matches(const PressureList& u) const;
};

struct StopCondition {
  std::optional<double> max_time;
  std::optional<std::uint64_t> max_events;
  std::optional<Target> target;
};

enum class Termination { time_horizon, event_budget, target_hit };

struct Trajectory {
  PressureList initial;
  std::vector<EventRecord> events;
  PressureList final_state;
  Termination terminated_by;
  // Thinning diagnostics: dominating-process marks drawn vs accepted.
  std::uint64_t proposals = 0;
  std::uint64_t accepts = 0;
};

struct HitResult {
  bool hit = false;
  double hitting_time = 0.0;  // valid iff hit
  std::uint64_t events_used = 0;
  std::optional<Termination> censored_at;
};

struct NextEvent {
  double dt;  // includes waiting through rejected thinning marks
  int actor;
  Opinion opinion;
  std::uint64_t proposals = 1;
};

// Exponential race sampled in log domain (Gumbel-max over the 2N log-rates).
NextEvent next_event_direct(const ModelParams& p, const PressureList& u, Rng& rng);

// Poisson-plane thinning: marks land in [0, q<(u)) or [lambda, lambda+q>(u)),
// marks in the dead band [q<(u), lambda) are rejected.
NextEvent next_event_thinning(const ModelParams& p, const PressureList& u, Rng& rng);

Trajectory simulate(const ModelParams& p, const PressureList& u0, const StopCondition& stop,
                    Scheme scheme, Rng& rng);

Trajectory simulate(const ModelParams& p, const PressureList& u0, const StopCondition& stop,
                    Scheme scheme, std::uint64_t seed);

HitResult hitting_time(const ModelParams& p, const PressureList& u0, const Target& target,
                       const StopCondition& budget, Scheme scheme, Rng& rng);

// State at time t from the counting-measure formula: signed opinion counts
// since each actor's last expression (or since 0, plus u0, if it never
// expressed). Must agree exactly with the fold of apply_jump.
PressureList reconstruct_state(const PressureList& u0, const std::vector<EventRecord>& events,
                               double t);

// JSON-lines trajectory export; header line carries {N, beta, seed, scheme}.
void write_jsonl(std::ostream& os, const ModelParams& p, std::uint64_t seed, Scheme scheme,
                 const Trajectory& traj);

std::string to_string(Scheme s);
std::string to_string(Termination t);

}  // namespace polar

#endif  // POLAR_ENGINE_HPP
