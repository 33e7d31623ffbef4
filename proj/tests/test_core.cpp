#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "polar/model.hpp"
#include "polar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

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

PressureList random_state(int n, int span, Rng& rng) {
  PressureList u(n);
  for (;;) {
    for (int i = 0; i < n; ++i)
      u[i] = static_cast<std::int64_t>(rng.next_u64() % (2 * span + 1)) - span;
    u[static_cast<Eigen::Index>(rng.next_u64() % n)] = 0;
    return u;
  }
}

}  // namespace

TEST_CASE("model params validation") {
  CHECK_THROWS_AS(ModelParams(2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(3, -0.5), std::invalid_argument);
  CHECK_NOTHROW(ModelParams(3, 0.0));
}

TEST_CASE("membership") {
  CHECK(validate_membership(make({0, 0, 0})));
  CHECK(validate_membership(make({0, 1, 2})));
  CHECK_FALSE(validate_membership(make({1, 2, 3})));
  CHECK_THROWS_AS(check_state(make({1, 2, 3})), std::invalid_argument);
}

TEST_CASE("apply_jump examples") {
  CHECK(eq(apply_jump(make({0, 2, -1}), 2, Opinion::favorable), make({1, 0, 0})));
  CHECK(eq(apply_jump(make({0, 0, 0}), 1, Opinion::contrary), make({0, -1, -1})));
  CHECK(eq(apply_jump(make({0, 1, 2}), 3, Opinion::favorable), make({1, 2, 0})));
  CHECK_THROWS_AS(apply_jump(make({0, 1, 2}), 4, Opinion::favorable), std::out_of_range);
  CHECK_THROWS_AS(apply_jump(make({0, 1, 2}), 0, Opinion::favorable), std::out_of_range);
}

TEST_CASE("apply_jump closure in S") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const PressureList u = random_state(3 + static_cast<int>(rng.next_u64() % 3), 5, rng);
    for (int a = 1; a <= u.size(); ++a)
      for (Opinion o : {Opinion::favorable, Opinion::contrary}) {
        const PressureList v = apply_jump(u, a, o);
        CHECK(v[a - 1] == 0);
        CHECK(validate_membership(v));
      }
  }
}

TEST_CASE("log_rate examples") {
  const ModelParams p0(3, 0.0);
  CHECK(log_rate(p0, make({0, 7, -4}), 2, Opinion::contrary) == 0.0);
  const ModelParams pln2(3, std::log(2.0));
  CHECK(log_rate(pln2, make({0, 2, 1}), 2, Opinion::favorable) ==
        doctest::Approx(2.0 * std::log(2.0)));
  const ModelParams p1(3, 1.0);
  CHECK(log_rate(p1, make({0, -3, 1}), 2, Opinion::favorable) == doctest::Approx(-3.0));
}

TEST_CASE("log_total_rate examples") {
  const ModelParams p0(3, 0.0);
  CHECK(log_total_rate(p0, make({0, 0, 0})) == doctest::Approx(std::log(6.0)));
  const ModelParams p1(3, 1.0);
  const double e = std::exp(1.0);
  CHECK(log_total_rate(p1, make({0, 1, 2})) ==
        doctest::Approx(std::log(2.0 + e + 1.0 / e + e * e + 1.0 / (e * e))));
  // Large exponent: ln(2 + e + 1/e + e^50 + e^-50) = 50 + 9.8e-22, which is
  // exactly 50.0 in double precision; the raw sum would overflow nothing here
  // but beta*u = 500 below surely would.
  const double big = log_total_rate(p1, make({0, 1, 50}));
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(50.0).epsilon(1e-14));
  const double huge = log_total_rate(p1, make({0, 1, 500}));
  CHECK(std::isfinite(huge));
  CHECK(huge == doctest::Approx(500.0).epsilon(1e-14));
}

TEST_CASE("log_total_rate lower bound ln(2N)") {
  Rng rng(5);
  for (double beta : {0.0, 0.5, 2.0}) {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 3 + static_cast<int>(rng.next_u64() % 4);
      const ModelParams p(n, beta);
      const PressureList u = random_state(n, 6, rng);
      CHECK(log_total_rate(p, u) >= std::log(2.0 * n) - 1e-12);
    }
  }
}

TEST_CASE("classify examples") {
  {
    const ClassFlags f = classify(make({0, 1, 2}));
    CHECK(f.ladder_plus);
    CHECK(f.consensus_plus);
    CHECK(f.s_plus);
    CHECK(f.n_of_u == 2);
    CHECK_FALSE(f.ladder_minus);
    CHECK_FALSE(f.is_zero);
  }
  {
    const ClassFlags f = classify(make({0, 0, 5}));
    CHECK(f.consensus_plus);
    CHECK_FALSE(f.ladder_plus);
    CHECK_FALSE(f.consensus_minus);
  }
  {
    const ClassFlags f = classify(make({0, 0, 0}));
    CHECK(f.is_zero);
    CHECK_FALSE(f.consensus_plus);
    CHECK_FALSE(f.consensus_minus);
    CHECK_FALSE(f.ladder_plus);
    CHECK_FALSE(f.ladder_minus);
  }
  {
    // The staged condition with n = 1 requires every pressure >= 0 (plus
    // side) or <= 0 (minus side); the -1 and +1 entries rule both out.
    const ClassFlags f = classify(make({0, 1, -1}));
    CHECK_FALSE(f.consensus_plus);
    CHECK_FALSE(f.consensus_minus);
    CHECK_FALSE(f.s_plus);
    CHECK_FALSE(f.s_minus);
    CHECK_FALSE(f.n_of_u.has_value());
  }
  {
    // (0,1,1): the run {1} is realized and nothing is below 0.
    const ClassFlags f = classify(make({0, 1, 1}));
    CHECK(f.s_plus);
    CHECK(f.n_of_u == 1);
  }
  {
    // (0,1,2,-1) at N=4: run {1,2} realized and min = -1 >= -(2-1).
    const ClassFlags f = classify(make({0, 1, 2, -1}));
    CHECK(f.s_plus);
    CHECK(f.n_of_u == 2);
    CHECK_FALSE(f.consensus_plus);
  }
  CHECK_THROWS_AS(classify(make({1, 2, 3})), std::invalid_argument);
}

TEST_CASE("classify flag implications") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 3);
    const PressureList u = random_state(n, n, rng);
    const ClassFlags f = classify(u);
    if (f.ladder_plus) CHECK(f.consensus_plus);
    if (f.ladder_minus) CHECK(f.consensus_minus);
    CHECK_FALSE((f.consensus_plus && f.consensus_minus));
    if (f.s_plus || f.s_minus) CHECK(f.n_of_u.has_value());
    if (f.n_of_u) {
      CHECK(*f.n_of_u >= 1);
      CHECK(*f.n_of_u <= n - 1);
    }
  }
}

TEST_CASE("symmetry transforms") {
  CHECK(eq(negate(make({0, 1, 2})), make({0, -1, -2})));
  CHECK(eq(permute(make({0, 1, 2}), {2, 3, 1}), make({1, 2, 0})));
  CHECK(eq(negate(negate(make({0, -4, 7}))), make({0, -4, 7})));
  CHECK_THROWS_AS(permute(make({0, 1, 2}), {1, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(permute(make({0, 1, 2}), {1, 2}), std::invalid_argument);
}

TEST_CASE("rate symmetry identities") {
  const ModelParams p(4, 1.3);
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const PressureList u = random_state(4, 6, rng);
    for (int a = 1; a <= 4; ++a)
      for (Opinion o : {Opinion::favorable, Opinion::contrary}) {
        const Opinion neg_o = o == Opinion::favorable ? Opinion::contrary : Opinion::favorable;
        CHECK(log_rate(p, negate(u), a, neg_o) == doctest::Approx(log_rate(p, u, a, o)));
      }
    CHECK(log_total_rate(p, negate(u)) == doctest::Approx(log_total_rate(p, u)));
    CHECK(log_total_rate(p, permute(u, {3, 1, 4, 2})) ==
          doctest::Approx(log_total_rate(p, u)));
  }
}

TEST_CASE("classify commutes with symmetries") {
  Rng rng(17);
  const std::vector<int> sigma{2, 4, 1, 3};
  for (int trial = 0; trial < 300; ++trial) {
    const PressureList u = random_state(4, 4, rng);
    const ClassFlags f = classify(u);
    const ClassFlags fn = classify(negate(u));
    CHECK(fn.is_zero == f.is_zero);
    CHECK(fn.ladder_plus == f.ladder_minus);
    CHECK(fn.ladder_minus == f.ladder_plus);
    CHECK(fn.consensus_plus == f.consensus_minus);
    CHECK(fn.consensus_minus == f.consensus_plus);
    CHECK(fn.s_plus == f.s_minus);
    CHECK(fn.s_minus == f.s_plus);
    CHECK(fn.n_of_u == f.n_of_u);
    const ClassFlags fp = classify(permute(u, sigma));
    CHECK(fp.is_zero == f.is_zero);
    CHECK(fp.ladder_plus == f.ladder_plus);
    CHECK(fp.ladder_minus == f.ladder_minus);
    CHECK(fp.consensus_plus == f.consensus_plus);
    CHECK(fp.consensus_minus == f.consensus_minus);
    CHECK(fp.s_plus == f.s_plus);
    CHECK(fp.s_minus == f.s_minus);
    CHECK(fp.n_of_u == f.n_of_u);
  }
}

TEST_CASE("admissible moves examples") {
  {
    const auto moves = admissible_moves(make({0, 0, 0}));
    CHECK(moves.size() == 6);
  }
  {
    const auto moves = admissible_moves(make({0, 1, 2}));
    REQUIRE(moves.size() == 1);
    CHECK(moves[0] == std::pair{3, Opinion::favorable});
  }
  {
    const auto moves = admissible_moves(make({0, 2, -2}));
    REQUIRE(moves.size() == 2);
    CHECK(moves[0] == std::pair{2, Opinion::favorable});
    CHECK(moves[1] == std::pair{3, Opinion::contrary});
  }
}

TEST_CASE("ladder closure under admissible moves") {
  Rng rng(23);
  for (int n : {3, 4, 5}) {
    PressureList u(n);
    for (int i = 0; i < n; ++i) u[i] = i;
    for (int step = 0; step < 50; ++step) {
      const auto moves = admissible_moves(u);
      REQUIRE_FALSE(moves.empty());
      const auto& [a, o] = moves[rng.next_u64() % moves.size()];
      u = apply_jump(u, a, o);
      CHECK(classify(u).ladder_plus);
    }
    // Mirror statement on the minus side.
    PressureList v = negate(u);
    for (int step = 0; step < 50; ++step) {
      const auto moves = admissible_moves(v);
      const auto& [a, o] = moves[rng.next_u64() % moves.size()];
      v = apply_jump(v, a, o);
      CHECK(classify(v).ladder_minus);
    }
  }
}
