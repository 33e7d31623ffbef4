#include "polar/engine.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace polar {

bool Target::matches(const PressureList& u) const {
  if (list) return u.size() == list->size() && (u.array() == list->array()).all();
  if (!cls) throw std::invalid_argument("empty target");
  const ClassFlags f = classify(u);
  switch (*cls) {
    case TargetClass::ladder: return f.ladder_plus || f.ladder_minus;
    case TargetClass::ladder_plus: return f.ladder_plus;
    case TargetClass::ladder_minus: return f.ladder_minus;
    case TargetClass::consensus_plus: return f.consensus_plus;
    case TargetClass::consensus_minus: return f.consensus_minus;
    case TargetClass::zero: return f.is_zero;
  }
  return false;
}

NextEvent next_event_direct(const ModelParams& p, const PressureList& u, Rng& rng) {
  check_state(u);
  const int n = static_cast<int>(u.size());
  const double log_q = log_total_rate(p, u);

  // Holding time Exp(q), computed through logs so huge rates do not overflow.
  const double e1 = -std::log(rng.uniform01());
  const double dt = std::exp(std::log(e1) - log_q);

  // Gumbel-max selection; ties (probability zero, but possible in floating
  // point) go to the first pair in (actor, +1 before -1) order.
  double best = -std::numeric_limits<double>::infinity();
  int best_actor = 1;
  Opinion best_op = Opinion::favorable;
  for (int a = 1; a <= n; ++a) {
    for (Opinion o : {Opinion::favorable, Opinion::contrary}) {
      const double g = log_rate(p, u, a, o) - std::log(-std::log(rng.uniform01()));
      if (g > best) {
        best = g;
        best_actor = a;
        best_op = o;
      }
    }
  }
  return {dt, best_actor, best_op, 1};
}

NextEvent next_event_thinning(const ModelParams& p, const PressureList& u, Rng& rng) {
  check_state(u);
  const int n = static_cast<int>(u.size());
  const double lambda =
      n * (std::exp(p.beta * (n - 1)) + std::exp(-p.beta * (n - 1)));

  // Per-actor clock rates, split by whether |u(a)| < N (lower band) or not
  // (upper band); each actor occupies a minus-interval then a plus-interval.
  std::vector<double> lo_minus(n), lo_plus(n), hi_minus(n), hi_plus(n);
  double q_lo = 0.0, q_hi = 0.0;
  for (int a = 0; a < n; ++a) {
    const double x = p.beta * static_cast<double>(u[a]);
    const double wm = std::exp(-x), wp = std::exp(x);
    if (std::abs(u[a]) < n) {
      lo_minus[a] = wm;
      lo_plus[a] = wp;
      q_lo += wm + wp;
    } else {
      hi_minus[a] = wm;
      hi_plus[a] = wp;
      q_hi += wm + wp;
    }
  }
  const double total = lambda + q_hi;

  double t_acc = 0.0;
  std::uint64_t proposals = 0;
  for (;;) {
    ++proposals;
    t_acc += -std::log(rng.uniform01()) / total;
    double y = rng.uniform01() * total;
    const std::vector<double>* band_minus = nullptr;
    const std::vector<double>* band_plus = nullptr;
    if (y < q_lo) {
      band_minus = &lo_minus;
      band_plus = &lo_plus;
    } else if (y < lambda) {
      continue;  // dead band: the dominating clock ticks, no jump
    } else {
      y -= lambda;
      band_minus = &hi_minus;
      band_plus = &hi_plus;
    }
    for (int a = 0; a < n; ++a) {
      if (y < (*band_minus)[a]) return {t_acc, a + 1, Opinion::contrary, proposals};
      y -= (*band_minus)[a];
      if (y < (*band_plus)[a]) return {t_acc, a + 1, Opinion::favorable, proposals};
      y -= (*band_plus)[a];
    }
    // Rounding pushed y past the last interval; attribute to the final clock.
    return {t_acc, n, Opinion::favorable, proposals};
  }
}

Trajectory simulate(const ModelParams& p, const PressureList& u0, const StopCondition& stop,
                    Scheme scheme, Rng& rng) {
  check_state(u0);
  if (u0.size() != p.n_actors) throw std::invalid_argument("state length != n_actors");
  if (!stop.max_time && !stop.max_events && !stop.target)
    throw std::invalid_argument("stop condition sets no bound");

  Trajectory traj;
  traj.initial = u0;
  traj.final_state = u0;
  traj.terminated_by = Termination::event_budget;

  PressureList u = u0;
  // Compensated (Kahan) accumulation: metastability runs add ~1e8 tiny steps.
  double t = 0.0, t_comp = 0.0;
  std::uint64_t count = 0;

  for (;;) {
    if (stop.max_events && count >= *stop.max_events) {
      traj.terminated_by = Termination::event_budget;
      break;
    }
    const NextEvent ev = scheme == Scheme::direct ? next_event_direct(p, u, rng)
                                                  : next_event_thinning(p, u, rng);
    traj.proposals += ev.proposals;
    const double y = ev.dt - t_comp;
    const double t_next = t + y;
    if (stop.max_time && t_next > *stop.max_time) {
      traj.terminated_by = Termination::time_horizon;
      break;
    }
    t_comp = (t_next - t) - y;
    t = t_next;
    ++traj.accepts;
    u = apply_jump(u, ev.actor, ev.opinion);
    traj.events.push_back({t, ev.actor, opinion_sign(ev.opinion)});
    ++count;
    if (stop.target && stop.target->matches(u)) {
      traj.terminated_by = Termination::target_hit;
      break;
    }
  }
  traj.final_state = u;
  return traj;
}

Trajectory simulate(const ModelParams& p, const PressureList& u0, const StopCondition& stop,
                    Scheme scheme, std::uint64_t seed) {
  Rng rng(seed);
  return simulate(p, u0, stop, scheme, rng);
}

HitResult hitting_time(const ModelParams& p, const PressureList& u0, const Target& target,
                       const StopCondition& budget, Scheme scheme, Rng& rng) {
  StopCondition stop = budget;
  stop.target = target;
  if (!stop.max_events) stop.max_events = 100'000'000ULL;  // default budget
  const Trajectory traj = simulate(p, u0, stop, scheme, rng);
  HitResult r;
  r.events_used = traj.events.size();
  if (traj.terminated_by == Termination::target_hit) {
    r.hit = true;
    r.hitting_time = traj.events.back().time;
  } else {
    r.censored_at = traj.terminated_by;
  }
  return r;
}

PressureList reconstruct_state(const PressureList& u0, const std::vector<EventRecord>& events,
                               double t) {
  const Eigen::Index n = u0.size();
  for (std::size_t k = 1; k < events.size(); ++k)
    if (!(events[k].time > events[k - 1].time))
      throw std::invalid_argument("event times are not strictly increasing");

  // S[k] = sum of the first k opinions; last own-event index per actor.
  std::size_t m = 0;
  while (m < events.size() && events[m].time <= t) ++m;
  std::vector<std::int64_t> opinion_sum(m + 1, 0);
  std::vector<std::size_t> last_own(static_cast<std::size_t>(n), 0);  // 1-based, 0 = never
  for (std::size_t k = 0; k < m; ++k) {
    opinion_sum[k + 1] = opinion_sum[k] + events[k].opinion;
    last_own[static_cast<std::size_t>(events[k].actor - 1)] = k + 1;
  }
  PressureList u(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const std::size_t la = last_own[static_cast<std::size_t>(a)];
    // Events by actor a itself never fall in (L_t^a, t], so the signed count
    // over other actors equals the total signed count on that window.
    u[a] = (la == 0 ? u0[a] : 0) + (opinion_sum[m] - opinion_sum[la]);
  }
  return u;
}

void write_jsonl(std::ostream& os, const ModelParams& p, std::uint64_t seed, Scheme scheme,
                 const Trajectory& traj) {
  nlohmann::json header = {{"N", p.n_actors},
                           {"beta", p.beta},
                           {"seed", seed},
                           {"scheme", to_string(scheme)}};
  os << header.dump() << '\n';
  for (const EventRecord& e : traj.events) {
    nlohmann::json rec = {{"t", e.time}, {"a", e.actor}, {"o", e.opinion}};
    os << rec.dump() << '\n';
  }
}

std::string to_string(Scheme s) { return s == Scheme::direct ? "direct" : "thinning"; }

std::string to_string(Termination t) {
  switch (t) {
    case Termination::time_horizon: return "time_horizon";
    case Termination::event_budget: return "event_budget";
    case Termination::target_hit: return "target_hit";
  }
  return "unknown";
}

}  // namespace polar
