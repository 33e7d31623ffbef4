#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "polar/engine.hpp"
#include "polar/oracle.hpp"
#include "polar/stats.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

using namespace polar;

namespace {

bool eq(const PressureList& a, const PressureList& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

PressureList make(std::initializer_list<std::int64_t> vals) {
  PressureList u(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (auto v : vals) u[i++] = v;
  return u;
}

}  // namespace

TEST_CASE("direct scheme: uniform selection and mean holding at beta = 0") {
  const ModelParams p(3, 0.0);
  const PressureList u = make({0, 0, 0});
  Rng rng(101);
  std::map<std::pair<int, int>, std::uint64_t> counts;
  double t_sum = 0.0;
  const int n_draws = 60000;
  for (int i = 0; i < n_draws; ++i) {
    const NextEvent ev = next_event_direct(p, u, rng);
    ++counts[{ev.actor, opinion_sign(ev.opinion)}];
    t_sum += ev.dt;
  }
  CHECK(counts.size() == 6);
  for (const auto& [pair, c] : counts) {
    const double freq = static_cast<double>(c) / n_draws;
    CHECK(freq == doctest::Approx(1.0 / 6.0).epsilon(0.05));
  }
  CHECK(t_sum / n_draws == doctest::Approx(1.0 / 6.0).epsilon(0.02));
}

TEST_CASE("direct scheme: selection probability of the forced move is zeta") {
  for (double beta : {0.0, 1.0, 2.5}) {
    const ModelParams p(3, beta);
    const PressureList u = make({1, 0, 0});
    // P(a=1, o=+1) = e^beta / (e^beta + e^-beta + 2(N-1)) exactly.
    const double prob =
        std::exp(log_rate(p, u, 1, Opinion::favorable) - log_total_rate(p, u));
    CHECK(prob == doctest::Approx(zeta_beta(p)).epsilon(1e-12));
  }
}

TEST_CASE("direct scheme: selection frequency matches normalized rates") {
  const ModelParams p(3, 1.0);
  const PressureList u = make({0, 1, 2});
  const double e = std::exp(1.0);
  const double q = 2.0 + e + 1.0 / e + e * e + 1.0 / (e * e);
  const double expected = e * e / q;
  Rng rng(202);
  const int n_draws = 50000;
  int hits = 0;
  for (int i = 0; i < n_draws; ++i) {
    const NextEvent ev = next_event_direct(p, u, rng);
    if (ev.actor == 3 && ev.opinion == Opinion::favorable) ++hits;
  }
  const double freq = static_cast<double>(hits) / n_draws;
  const double se = std::sqrt(expected * (1.0 - expected) / n_draws);
  CHECK(std::abs(freq - expected) < 4.0 * se);
}

TEST_CASE("thinning scheme matches direct scheme in distribution") {
  const ModelParams p(3, 1.0);
  for (const PressureList& u : {make({1, 0, 0}), make({0, 1, 5}), make({0, -2, 3})}) {
    const int n_draws = 100000;
    // Categories: 6 (actor, opinion) pairs.
    std::vector<std::uint64_t> direct_counts(6, 0), thin_counts(6, 0);
    Rng rd(303), rt(404);
    double dt_direct = 0.0, dt_thin = 0.0;
    for (int i = 0; i < n_draws; ++i) {
      const NextEvent a = next_event_direct(p, u, rd);
      const NextEvent b = next_event_thinning(p, u, rt);
      ++direct_counts[(a.actor - 1) * 2 + (a.opinion == Opinion::favorable ? 0 : 1)];
      ++thin_counts[(b.actor - 1) * 2 + (b.opinion == Opinion::favorable ? 0 : 1)];
      dt_direct += a.dt;
      dt_thin += b.dt;
    }
    CHECK(chi_square_two_sample_pvalue(direct_counts, thin_counts) > 0.01);
    // Holding times share the mean 1/q.
    CHECK(dt_thin / n_draws == doctest::Approx(dt_direct / n_draws).epsilon(0.05));
  }
}

TEST_CASE("thinning proposals: dead band rejections are counted") {
  const ModelParams p(3, 2.0);
  Rng rng(55);
  const NextEvent ev = next_event_thinning(p, make({0, 1, 1}), rng);
  CHECK(ev.proposals >= 1);
  CHECK(ev.dt > 0.0);
}

TEST_CASE("simulate basics") {
  const ModelParams p(3, 1.0);
  const PressureList u0 = make({0, 1, 2});
  StopCondition stop;
  SUBCASE("empty stop condition is an error") {
    CHECK_THROWS_AS(simulate(p, u0, stop, Scheme::direct, 1ULL), std::invalid_argument);
  }
  SUBCASE("zero event budget") {
    stop.max_events = 0;
    const Trajectory t = simulate(p, u0, stop, Scheme::direct, 1ULL);
    CHECK(t.events.empty());
    CHECK(eq(t.final_state, u0));
    CHECK(t.terminated_by == Termination::event_budget);
  }
  SUBCASE("determinism") {
    stop.max_events = 500;
    const Trajectory a = simulate(p, u0, stop, Scheme::thinning, 99ULL);
    const Trajectory b = simulate(p, u0, stop, Scheme::thinning, 99ULL);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].time == b.events[i].time);
      CHECK(a.events[i].actor == b.events[i].actor);
      CHECK(a.events[i].opinion == b.events[i].opinion);
    }
    CHECK(eq(a.final_state, b.final_state));
  }
  SUBCASE("event times strictly increase") {
    stop.max_events = 2000;
    const Trajectory t = simulate(p, u0, stop, Scheme::direct, 7ULL);
    for (std::size_t i = 1; i < t.events.size(); ++i)
      CHECK(t.events[i].time > t.events[i - 1].time);
    CHECK(t.events.front().time > 0.0);
  }
}

TEST_CASE("simulate: event throughput at beta = 0 is q = 2N") {
  const ModelParams p(3, 0.0);
  StopCondition stop;
  stop.max_events = 100000;
  const Trajectory t = simulate(p, make({0, 0, 0}), stop, Scheme::direct, 31ULL);
  const double rate = static_cast<double>(t.events.size()) / t.events.back().time;
  CHECK(rate == doctest::Approx(6.0).epsilon(0.02));
}

TEST_CASE("trajectory final state equals the jump fold and resets hold") {
  const ModelParams p(4, 1.2);
  StopCondition stop;
  stop.max_events = 3000;
  const Trajectory t = simulate(p, make({0, -1, 2, 0}), stop, Scheme::thinning, 13ULL);
  PressureList u = t.initial;
  for (const EventRecord& e : t.events) {
    u = apply_jump(u, e.actor, opinion_from_sign(e.opinion));
    CHECK(u[e.actor - 1] == 0);  // reset property
  }
  CHECK(eq(u, t.final_state));
}

TEST_CASE("reconstruct_state examples") {
  CHECK(eq(reconstruct_state(make({0, 2, -1}), {}, 5.0), make({0, 2, -1})));
  const std::vector<EventRecord> one{{0.7, 2, +1}};
  CHECK(eq(reconstruct_state(make({0, 2, -1}), one, 1.0), make({1, 0, 0})));
  CHECK(eq(reconstruct_state(make({0, 2, -1}), one, 0.5), make({0, 2, -1})));
  const std::vector<EventRecord> bad{{0.7, 2, +1}, {0.7, 1, -1}};
  CHECK_THROWS_AS(reconstruct_state(make({0, 2, -1}), bad, 1.0), std::invalid_argument);
}

TEST_CASE("reconstruction identity on a long trajectory") {
  const ModelParams p(3, 1.0);
  StopCondition stop;
  stop.max_events = 1000;
  const Trajectory t = simulate(p, make({0, 2, -1}), stop, Scheme::direct, 71ULL);
  REQUIRE(t.events.size() == 1000);
  Rng rng(72);
  for (int k = 0; k < 50; ++k) {
    const double horizon = t.events.back().time * rng.uniform01();
    PressureList fold = t.initial;
    for (const EventRecord& e : t.events) {
      if (e.time > horizon) break;
      fold = apply_jump(fold, e.actor, opinion_from_sign(e.opinion));
    }
    CHECK(eq(reconstruct_state(t.initial, t.events, horizon), fold));
  }
  CHECK(eq(reconstruct_state(t.initial, t.events, t.events.back().time), t.final_state));
}

TEST_CASE("hitting_time: first-return convention and censoring") {
  const ModelParams p(3, 1.0);
  const Target ladder{TargetClass::ladder, std::nullopt};
  SUBCASE("start inside the target still needs a positive event time") {
    Rng rng(5);
    StopCondition budget;
    const HitResult h = hitting_time(p, make({0, 1, 2}), ladder, budget, Scheme::direct, rng);
    REQUIRE(h.hit);
    CHECK(h.hitting_time > 0.0);
    CHECK(h.events_used >= 1);
  }
  SUBCASE("budget exhaustion reports censoring") {
    Rng rng(6);
    StopCondition budget;
    budget.max_events = 1;
    const Target zero{TargetClass::zero, std::nullopt};
    const HitResult h = hitting_time(p, make({0, 1, 2}), zero, budget, Scheme::direct, rng);
    if (!h.hit) {
      REQUIRE(h.censored_at.has_value());
      CHECK(*h.censored_at == Termination::event_budget);
    }
  }
  SUBCASE("explicit list target") {
    Rng rng(7);
    StopCondition budget;
    const Target exact{std::nullopt, make({0, 0, 0})};
    const HitResult h = hitting_time(p, make({0, 1, 1}), exact, budget, Scheme::direct, rng);
    CHECK(h.hit);
  }
}

TEST_CASE("hitting_time mean matches the oracle first-passage solve") {
  const ModelParams p(3, 0.0);
  const TruncatedChain chain = build_generator(p, 3);
  std::vector<int> target;
  for (std::size_t i = 0; i < chain.states.size(); ++i) {
    const ClassFlags f = classify(chain.states[i]);
    if (f.ladder_plus || f.ladder_minus) target.push_back(static_cast<int>(i));
  }
  const Eigen::VectorXd h = expected_hitting_times(chain, target);
  const PressureList start = make({1, 0, 0});
  const double h_oracle = h[*chain.index_of(start)];

  const int reps = 10000;
  std::vector<double> samples;
  const Target ladder{TargetClass::ladder, std::nullopt};
  for (int i = 0; i < reps; ++i) {
    Rng rng = Rng::stream(2024, static_cast<std::uint64_t>(i));
    StopCondition budget;
    const HitResult r = hitting_time(p, start, ladder, budget, Scheme::direct, rng);
    REQUIRE(r.hit);
    samples.push_back(r.hitting_time);
  }
  const SampleSummary s = summarize(samples, 0);
  const double se = std::sqrt(s.variance / reps);
  // At beta=0 the dynamics never reach the cap in distribution-relevant ways
  // rarely enough that truncation bias is far below the MC error.
  CHECK(std::abs(s.mean - h_oracle) < 3.0 * se + 0.02);
}

TEST_CASE("window property: a low-pressure actor acts within every N events") {
  for (double beta : {0.5, 1.5}) {
    const ModelParams p(3, beta);
    StopCondition stop;
    stop.max_events = 20000;
    const Trajectory t = simulate(p, make({0, 1, 2}), stop, Scheme::direct, 909ULL);
    const int n = p.n_actors;
    PressureList u = t.initial;
    std::vector<bool> low;  // per event: pre-jump |pressure| of the actor < N
    for (const EventRecord& e : t.events) {
      low.push_back(std::abs(u[e.actor - 1]) < n);
      u = apply_jump(u, e.actor, opinion_from_sign(e.opinion));
    }
    for (std::size_t k = 0; k + n <= low.size(); ++k) {
      bool any = false;
      for (int j = 0; j < n; ++j) any = any || low[k + j];
      CHECK(any);
      if (!any) return;
    }
  }
}

TEST_CASE("non-explosion: horizon runs finish and low-band rate stays under lambda") {
  for (double beta : {1.0, 2.0}) {
    const ModelParams p(3, beta);
    StopCondition stop;
    stop.max_time = 40.0;
    stop.max_events = 50'000'000;  // safety net; horizon should bind first
    const Trajectory t = simulate(p, make({0, 0, 0}), stop, Scheme::thinning, 77ULL);
    CHECK(t.terminated_by == Termination::time_horizon);
    const double lambda =
        p.n_actors * (std::exp(beta * (p.n_actors - 1)) + std::exp(-beta * (p.n_actors - 1)));
    // Count events whose acting actor had pre-jump |pressure| < N.
    PressureList u = t.initial;
    std::uint64_t low = 0;
    for (const EventRecord& e : t.events) {
      if (std::abs(u[e.actor - 1]) < p.n_actors) ++low;
      u = apply_jump(u, e.actor, opinion_from_sign(e.opinion));
    }
    const double rate = static_cast<double>(low) / *stop.max_time;
    CHECK(rate <= lambda * (1.0 + 4.0 / std::sqrt(static_cast<double>(low) + 1.0)));
  }
}

TEST_CASE("jsonl export schema") {
  const ModelParams p(3, 1.0);
  StopCondition stop;
  stop.max_events = 25;
  const Trajectory t = simulate(p, make({0, 1, 2}), stop, Scheme::direct, 42ULL);
  std::ostringstream os;
  write_jsonl(os, p, 42, Scheme::direct, t);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  const auto header = nlohmann::json::parse(line);
  CHECK(header["N"] == 3);
  CHECK(header["beta"] == 1.0);
  CHECK(header["seed"] == 42);
  CHECK(header["scheme"] == "direct");
  std::size_t records = 0;
  double prev_t = 0.0;
  while (std::getline(is, line)) {
    const auto rec = nlohmann::json::parse(line);
    const double tt = rec["t"].get<double>();
    CHECK(tt > prev_t);
    prev_t = tt;
    const int o = rec["o"].get<int>();
    CHECK((o == 1 || o == -1));
    ++records;
  }
  CHECK(records == t.events.size());
}
