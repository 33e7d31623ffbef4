#include "polar/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace polar {

namespace {

std::string state_label(const PressureList& u) {
  std::string s;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(u[i]);
  }
  return s;
}

PressureList zero_list(int n) { return PressureList::Zero(n); }

PressureList ladder_list(int n, int sign) {
  PressureList u(n);
  for (int i = 0; i < n; ++i) u[i] = sign * i;
  return u;
}

const char* class_key(const ClassFlags& f) {
  if (f.is_zero) return "zero";
  if (f.ladder_plus) return "ladder_plus";
  if (f.ladder_minus) return "ladder_minus";
  if (f.consensus_plus) return "consensus_plus";
  if (f.consensus_minus) return "consensus_minus";
  return "other";
}

std::vector<PressureList> starts_or(const ExperimentSpec& spec, PressureList fallback) {
  if (!spec.starts.empty()) return spec.starts;
  return {std::move(fallback)};
}

}  // namespace

OccupationRow occupation_run(const ModelParams& p, const PressureList& u0,
                             std::uint64_t total_events, Scheme scheme, Rng& rng) {
  check_state(u0);
  OccupationRow row;
  row.n_actors = p.n_actors;
  row.beta = p.beta;

  const std::uint64_t burn_in = total_events / 10;
  const std::uint64_t measured = total_events - burn_in;
  constexpr std::uint64_t n_batches = 20;

  std::map<std::string, double> class_time;
  std::vector<std::map<std::string, double>> batch_class_time(n_batches);
  std::vector<double> batch_time(n_batches, 0.0);

  PressureList u = u0;
  for (std::uint64_t k = 0; k < total_events; ++k) {
    const NextEvent ev = scheme == Scheme::direct ? next_event_direct(p, u, rng)
                                                  : next_event_thinning(p, u, rng);
    if (k >= burn_in) {
      const std::string key = class_key(classify(u));
      class_time[key] += ev.dt;
      row.state_fraction[state_label(u)] += ev.dt;
      row.observed_time += ev.dt;
      const std::uint64_t b = std::min<std::uint64_t>((k - burn_in) * n_batches / measured,
                                                      n_batches - 1);
      batch_class_time[b][key] += ev.dt;
      batch_time[b] += ev.dt;
      ++row.events;
    }
    u = apply_jump(u, ev.actor, ev.opinion);
  }

  for (auto& [key, t] : class_time) row.fraction[key] = t / row.observed_time;
  row.fraction["ladder"] = row.fraction["ladder_plus"] + row.fraction["ladder_minus"];
  for (auto& [key, t] : row.state_fraction) t /= row.observed_time;

  for (const auto& [key, unused] : row.fraction) {
    double mean = 0.0;
    std::vector<double> per_batch(n_batches, 0.0);
    for (std::uint64_t b = 0; b < n_batches; ++b) {
      double t = 0.0;
      if (key == "ladder") {
        auto it = batch_class_time[b].find("ladder_plus");
        if (it != batch_class_time[b].end()) t += it->second;
        it = batch_class_time[b].find("ladder_minus");
        if (it != batch_class_time[b].end()) t += it->second;
      } else if (auto it = batch_class_time[b].find(key); it != batch_class_time[b].end()) {
        t = it->second;
      }
      per_batch[b] = batch_time[b] > 0.0 ? t / batch_time[b] : 0.0;
      mean += per_batch[b];
    }
    mean /= static_cast<double>(n_batches);
    double ss = 0.0;
    for (double x : per_batch) ss += (x - mean) * (x - mean);
    row.stderr_[key] =
        std::sqrt(ss / static_cast<double>(n_batches - 1) / static_cast<double>(n_batches));
  }
  return row;
}

std::vector<OccupationRow> occupation_experiment(const ExperimentSpec& spec) {
  std::vector<OccupationRow> rows;
  const std::uint64_t events = spec.budget.max_events.value_or(200'000);
  std::uint64_t stream = 0;
  for (const auto& [n, beta] : spec.grid) {
    const ModelParams p(n, beta);
    for (const PressureList& u0 : starts_or(spec, zero_list(n))) {
      Rng rng = Rng::stream(spec.master_seed, stream++);
      rows.push_back(occupation_run(p, u0, events, spec.scheme, rng));
    }
  }
  return rows;
}

std::vector<ConsensusRow> consensus_time_experiment(const ExperimentSpec& spec) {
  std::vector<ConsensusRow> rows;
  std::uint64_t seed_salt = 0;
  for (const auto& [n, beta] : spec.grid) {
    const ModelParams p(n, beta);
    for (const PressureList& start : starts_or(spec, zero_list(n))) {
      check_state(start);
      ConsensusRow row;
      row.n_actors = n;
      row.beta = beta;
      row.start = start;
      row.threshold = std::exp(-beta * (1.0 - spec.delta));
      const bool from_zero = (start.array() == 0).all();

      struct Rep {
        bool exceeded = false;
        bool censored = false;
        double time = 0.0;
      };
      const Target target{TargetClass::ladder, std::nullopt};
      const auto reps = run_replications(
          spec.replications, spec.master_seed + seed_salt,
          [&](std::uint64_t, Rng& rng) {
            Rep r;
            // From the flat list a short settling allowance is granted first:
            // an independent Exp(2N) draw added to the threshold.
            double allowance = 0.0;
            if (from_zero)
              allowance = -std::log(rng.uniform01()) / (2.0 * static_cast<double>(p.n_actors));
            const HitResult h = hitting_time(p, start, target, spec.budget, spec.scheme, rng);
            r.censored = !h.hit;
            r.time = h.hitting_time;
            r.exceeded = !h.hit || h.hitting_time > row.threshold + allowance;
            return r;
          });
      ++seed_salt;

      std::uint64_t exceed = 0;
      for (const Rep& r : reps) {
        if (r.exceeded) ++exceed;
        if (r.censored)
          ++row.censored;
        else
          row.samples.push_back(r.time);
      }
      row.tail = wilson_interval(exceed, spec.replications);
      row.times = summarize(row.samples, row.censored);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

double lambda_beta(const ModelParams& p) {
  const double n1 = static_cast<double>(p.n_actors - 1);
  return 2.0 * n1 / (n1 + std::exp(p.beta));
}

double c_beta_lower_bound(const ModelParams& p) {
  const double n1 = static_cast<double>(p.n_actors - 1);
  return 1.0 / (n1 * std::exp(-p.beta) + lambda_beta(p));
}

MetastabilityResult metastability_run(const ModelParams& p, const PressureList& start,
                                      TargetClass target, std::uint64_t replications,
                                      std::uint64_t master_seed, Scheme scheme,
                                      const StopCondition& budget) {
  check_state(start);
  MetastabilityResult res;
  res.n_actors = p.n_actors;
  res.beta = p.beta;
  res.start = start;
  res.target = target;
  res.c_lower_bound = c_beta_lower_bound(p);

  const Target tgt{target, std::nullopt};
  const auto reps = run_replications(replications, master_seed, [&](std::uint64_t, Rng& rng) {
    return hitting_time(p, start, tgt, budget, scheme, rng);
  });

  for (const HitResult& h : reps) {
    if (h.hit)
      res.samples.push_back(h.hitting_time);
    else
      ++res.censored;
  }
  res.ks_valid = res.censored == 0 && !res.samples.empty();
  res.summary = summarize(res.samples, res.censored);
  if (!res.samples.empty()) {
    res.c_hat = empirical_quantile(res.samples, 1.0 - std::exp(-1.0));
    // Censored replications only push the true quantile up, so the lower
    // bound check stays conservative.
    res.bound_ok = res.c_hat >= res.c_lower_bound;
  }
  return res;
}

std::vector<MetastabilityResult> metastability_experiment(const ExperimentSpec& spec) {
  std::vector<MetastabilityResult> rows;
  std::uint64_t seed_salt = 0;
  for (const auto& [n, beta] : spec.grid) {
    const ModelParams p(n, beta);
    for (const PressureList& start : starts_or(spec, ladder_list(n, +1))) {
      rows.push_back(metastability_run(p, start, TargetClass::ladder_minus, spec.replications,
                                       spec.master_seed + seed_salt, spec.scheme, spec.budget));
      ++seed_salt;
    }
  }
  return rows;
}

std::vector<MEventRow> m_event_probability_experiment(const ExperimentSpec& spec, int m) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  std::vector<MEventRow> rows;
  std::uint64_t seed_salt = 0;
  for (const auto& [n, beta] : spec.grid) {
    const ModelParams p(n, beta);
    // zeta = e^beta / (e^beta + e^{-beta} + 2(N-1)), written to avoid overflow.
    const double zeta =
        1.0 / (1.0 + std::exp(-2.0 * beta) +
               2.0 * static_cast<double>(n - 1) * std::exp(-beta));
    for (const PressureList& start : starts_or(spec, zero_list(n))) {
      check_state(start);
      MEventRow row;
      row.n_actors = n;
      row.beta = beta;
      row.start = start;
      row.m = m;
      row.zeta_power_m = std::pow(zeta, m);

      const auto reps = run_replications(
          spec.replications, spec.master_seed + seed_salt, [&](std::uint64_t, Rng& rng) {
            PressureList u = start;
            for (int j = 0; j < m; ++j) {
              const NextEvent ev = spec.scheme == Scheme::direct
                                       ? next_event_direct(p, u, rng)
                                       : next_event_thinning(p, u, rng);
              const auto moves = admissible_moves(u);
              bool admissible = false;
              for (const auto& [a, o] : moves)
                if (a == ev.actor && o == ev.opinion) {
                  admissible = true;
                  break;
                }
              if (!admissible) return false;
              u = apply_jump(u, ev.actor, ev.opinion);
            }
            return true;
          });
      ++seed_salt;

      std::uint64_t hits = 0;
      for (bool ok : reps) hits += ok ? 1 : 0;
      row.estimate = wilson_interval(hits, spec.replications);
      row.bound_ok = row.estimate.high >= row.zeta_power_m;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace polar
