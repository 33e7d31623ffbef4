#include "polar/model.hpp"

#include <algorithm>
#include <cmath>

namespace polar {

bool validate_membership(const PressureList& u) {
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u[i] == 0) return true;
  return false;
}

void check_state(const PressureList& u) {
  if (!validate_membership(u))
    throw std::invalid_argument("list is not in the state space: no actor has pressure 0");
}

static void check_actor(const PressureList& u, int actor) {
  if (actor < 1 || actor > u.size()) throw std::out_of_range("actor index out of range");
}

PressureList apply_jump(const PressureList& u, int actor, Opinion o) {
  check_actor(u, actor);
  PressureList v = u.array() + opinion_sign(o);
  v[actor - 1] = 0;
  return v;
}

double log_rate(const ModelParams& p, const PressureList& u, int actor, Opinion o) {
  check_actor(u, actor);
  return p.beta * opinion_sign(o) * static_cast<double>(u[actor - 1]);
}

double log_total_rate(const ModelParams& p, const PressureList& u) {
  const Eigen::Index n = u.size();
  double max_term = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = p.beta * static_cast<double>(u[i]);
    max_term = std::max(max_term, std::abs(x));
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = p.beta * static_cast<double>(u[i]);
    sum += std::exp(x - max_term) + std::exp(-x - max_term);
  }
  return max_term + std::log(sum);
}

static bool is_ladder(const PressureList& u, int sign) {
  const Eigen::Index n = u.size();
  std::vector<std::int64_t> sorted(u.data(), u.data() + n);
  std::sort(sorted.begin(), sorted.end());
  if (sign > 0) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (sorted[i] != i) return false;
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      if (sorted[i] != -(n - 1 - i)) return false;
  }
  return true;
}

int staged_n(const PressureList& u, int sign) {
  const Eigen::Index n_actors = u.size();
  std::int64_t min_signed = 0;
  std::vector<bool> present(static_cast<std::size_t>(n_actors) + 1, false);
  for (Eigen::Index i = 0; i < n_actors; ++i) {
    const std::int64_t s = sign * u[i];
    min_signed = std::min(min_signed, s);
    if (s >= 1 && s <= n_actors) present[static_cast<std::size_t>(s)] = true;
  }
  int best = 0;
  for (int n = 1; n <= n_actors - 1; ++n) {
    if (!present[static_cast<std::size_t>(n)]) break;
    if (min_signed >= -(n - 1)) best = n;
  }
  return best;
}

ClassFlags classify(const PressureList& u) {
  check_state(u);
  ClassFlags f;
  f.is_zero = (u.array() == 0).all();
  if (!f.is_zero) {
    f.consensus_plus = (u.array() >= 0).all();
    f.consensus_minus = (u.array() <= 0).all();
    f.ladder_plus = is_ladder(u, +1);
    f.ladder_minus = is_ladder(u, -1);
  }
  const int np = staged_n(u, +1);
  const int nm = staged_n(u, -1);
  f.s_plus = np > 0;
  f.s_minus = nm > 0;
  if (np > 0 || nm > 0) f.n_of_u = std::max(np, nm);
  return f;
}

PressureList negate(const PressureList& u) { return -u; }

PressureList permute(const PressureList& u, const std::vector<int>& sigma) {
  const Eigen::Index n = u.size();
  if (static_cast<Eigen::Index>(sigma.size()) != n)
    throw std::invalid_argument("permutation size mismatch");
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int s : sigma) {
    if (s < 1 || s > n || seen[static_cast<std::size_t>(s - 1)])
      throw std::invalid_argument("sigma is not a bijection of {1..N}");
    seen[static_cast<std::size_t>(s - 1)] = true;
  }
  PressureList v(n);
  for (Eigen::Index a = 0; a < n; ++a) v[a] = u[sigma[static_cast<std::size_t>(a)] - 1];
  return v;
}

std::vector<std::pair<int, Opinion>> admissible_moves(const PressureList& u) {
  check_state(u);
  std::int64_t max_abs = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) max_abs = std::max(max_abs, std::abs(u[i]));
  std::vector<std::pair<int, Opinion>> moves;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) != max_abs) continue;
    const int a = static_cast<int>(i) + 1;
    if (u[i] >= 0) moves.emplace_back(a, Opinion::favorable);
    if (u[i] <= 0) moves.emplace_back(a, Opinion::contrary);
  }
  return moves;
}

}  // namespace polar
