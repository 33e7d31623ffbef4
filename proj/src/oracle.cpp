#include "polar/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <ostream>
#include <string>

namespace polar {

namespace {

std::string state_key(const PressureList& u) {
  std::string key(static_cast<std::size_t>(u.size()) * sizeof(std::int64_t), '\0');
  std::memcpy(key.data(), u.data(), key.size());
  return key;
}

double total_rate(const ModelParams& p, const PressureList& u) {
  return std::exp(log_total_rate(p, u));
}

}  // namespace

std::optional<int> TruncatedChain::index_of(const PressureList& u) const {
  auto it = index_.find(state_key(u));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<PressureList> enumerate_states(int n_actors, int cap) {
  if (n_actors < 3) throw std::invalid_argument("n_actors must be >= 3");
  if (cap < 0) throw std::invalid_argument("cap must be >= 0");
  std::vector<PressureList> states;
  PressureList u = PressureList::Constant(n_actors, -cap);
  for (;;) {
    if ((u.array() == 0).any()) states.push_back(u);
    int i = n_actors - 1;
    while (i >= 0 && u[i] == cap) u[i--] = -cap;
    if (i < 0) break;
    ++u[i];
  }
  return states;
}

TruncatedChain build_generator(const ModelParams& p, int cap) {
  if (cap < 1) throw std::invalid_argument("cap must be >= 1");
  const std::vector<PressureList> window = enumerate_states(p.n_actors, cap);
  const int w = static_cast<int>(window.size());
  std::unordered_map<std::string, int> window_index;
  for (int i = 0; i < w; ++i) window_index[state_key(window[i])] = i;

  // The clamped window contains fringe states with no pre-image (a list like
  // (cap, -cap, 0) cannot be entered, because a jump shifts all non-acting
  // coordinates by the same opinion and clamping only shrinks spreads). The
  // chain is restricted to the recurrent class containing the zero list,
  // which is the part the stationary and return-time analyses describe.
  std::vector<std::vector<int>> fwd(w), bwd(w);
  for (int i = 0; i < w; ++i) {
    for (int a = 1; a <= p.n_actors; ++a) {
      for (Opinion o : {Opinion::favorable, Opinion::contrary}) {
        PressureList image = apply_jump(window[i], a, o);
        for (Eigen::Index b = 0; b < image.size(); ++b)
          image[b] = std::clamp<std::int64_t>(image[b], -cap, cap);
        const int j = window_index.at(state_key(image));
        if (j == i) continue;
        fwd[i].push_back(j);
        bwd[j].push_back(i);
      }
    }
  }
  const auto bfs = [&](int source, const std::vector<std::vector<int>>& adj) {
    std::vector<bool> seen(static_cast<std::size_t>(w), false);
    std::deque<int> queue{source};
    seen[static_cast<std::size_t>(source)] = true;
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      for (int j : adj[static_cast<std::size_t>(i)])
        if (!seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = true;
          queue.push_back(j);
        }
    }
    return seen;
  };
  const int zero_idx = window_index.at(state_key(PressureList::Zero(p.n_actors)));
  const std::vector<bool> from_zero = bfs(zero_idx, fwd);
  const std::vector<bool> to_zero = bfs(zero_idx, bwd);
  std::vector<bool> keep(static_cast<std::size_t>(w), false);
  for (int i = 0; i < w; ++i) keep[i] = from_zero[i] && to_zero[i];
  for (int i = 0; i < w; ++i)
    if (keep[i])
      for (int j : fwd[i])
        if (!keep[j]) throw std::logic_error("recurrent class of the window is not closed");

  TruncatedChain chain(p, cap);
  for (int i = 0; i < w; ++i)
    if (keep[i]) chain.states.push_back(window[i]);
  const int n = static_cast<int>(chain.states.size());
  for (int i = 0; i < n; ++i) chain.index_[state_key(chain.states[i])] = i;

  chain.generator = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const PressureList& u = chain.states[i];
    for (int a = 1; a <= p.n_actors; ++a) {
      for (Opinion o : {Opinion::favorable, Opinion::contrary}) {
        PressureList image = apply_jump(u, a, o);
        for (Eigen::Index b = 0; b < image.size(); ++b)
          image[b] = std::clamp<std::int64_t>(image[b], -cap, cap);
        const auto j = chain.index_of(image);
        if (!j) throw std::logic_error("clamped image left the window");
        if (*j == i) continue;  // clamped self-loop, dropped
        chain.generator(i, *j) += std::exp(log_rate(p, u, a, o));
      }
    }
  }
  chain.exit_rate = chain.generator.rowwise().sum();
  chain.generator.diagonal() -= chain.exit_rate;
  chain.embedded = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    chain.embedded.row(i) = chain.generator.row(i) / chain.exit_rate[i];
    chain.embedded(i, i) = 0.0;
  }
  return chain;
}

bool is_irreducible(const TruncatedChain& chain) {
  const int n = static_cast<int>(chain.states.size());
  auto reachable = [&](bool forward) {
    std::vector<bool> seen(n, false);
    std::deque<int> queue{0};
    seen[0] = true;
    int count = 1;
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      for (int j = 0; j < n; ++j) {
        const double rate = forward ? chain.generator(i, j) : chain.generator(j, i);
        if (i != j && rate > 0.0 && !seen[j]) {
          seen[j] = true;
          ++count;
          queue.push_back(j);
        }
      }
    }
    return count == n;
  };
  return reachable(true) && reachable(false);
}

namespace {

// Solve x A = 0, sum(x) = 1 by replacing one equation with the normalization.
Eigen::VectorXd left_null_vector(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd sys = a.transpose();
  sys.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[0] = 1.0;
  return sys.partialPivLu().solve(rhs);
}

// Uniformized power iteration, used if the direct solve leaves a residual.
Eigen::VectorXd power_iterate(const Eigen::MatrixXd& transition, Eigen::VectorXd mu) {
  for (int iter = 0; iter < 200000; ++iter) {
    Eigen::VectorXd next = transition.transpose() * mu;
    next /= next.sum();
    const double diff = (next - mu).cwiseAbs().maxCoeff();
    mu = next;
    if (diff < 1e-12) break;
  }
  return mu;
}

}  // namespace

StationaryPair stationary_distribution(const TruncatedChain& chain) {
  if (!is_irreducible(chain)) throw std::runtime_error("truncated chain is not irreducible");
  const int n = static_cast<int>(chain.states.size());

  StationaryPair out;
  // Residuals are taken relative to the generator's magnitude: raw rates grow
  // like e^{beta*cap}, so an absolute residual would reject perfectly good
  // solves at large beta.
  const double scale = std::max(1.0, chain.generator.cwiseAbs().maxCoeff());
  out.mu = left_null_vector(chain.generator);
  out.residual_mu = (out.mu.transpose() * chain.generator).cwiseAbs().maxCoeff() / scale;
  if (out.residual_mu > 1e-10 || out.mu.minCoeff() < -1e-12) {
    const double q_max = chain.exit_rate.maxCoeff();
    Eigen::MatrixXd unif = Eigen::MatrixXd::Identity(n, n) + chain.generator / q_max;
    out.mu = power_iterate(unif, Eigen::VectorXd::Constant(n, 1.0 / n));
    out.residual_mu = (out.mu.transpose() * chain.generator).cwiseAbs().maxCoeff() / scale;
  }
  out.mu = out.mu.cwiseMax(0.0);
  out.mu /= out.mu.sum();

  Eigen::MatrixXd p_minus_i = chain.embedded - Eigen::MatrixXd::Identity(n, n);
  out.mu_tilde = left_null_vector(p_minus_i);
  out.residual_mu_tilde = (out.mu_tilde.transpose() * p_minus_i).cwiseAbs().maxCoeff();
  if (out.residual_mu_tilde > 1e-10 || out.mu_tilde.minCoeff() < -1e-12) {
    out.mu_tilde = power_iterate(chain.embedded, Eigen::VectorXd::Constant(n, 1.0 / n));
    out.residual_mu_tilde = (out.mu_tilde.transpose() * p_minus_i).cwiseAbs().maxCoeff();
  }
  out.mu_tilde = out.mu_tilde.cwiseMax(0.0);
  out.mu_tilde /= out.mu_tilde.sum();
  return out;
}

Eigen::VectorXd expected_hitting_times(const TruncatedChain& chain,
                                       const std::vector<int>& target) {
  if (target.empty()) throw std::invalid_argument("empty target set");
  const int n = static_cast<int>(chain.states.size());
  std::vector<bool> in_target(n, false);
  for (int i : target) in_target.at(static_cast<std::size_t>(i)) = true;
  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (!in_target[i]) rest.push_back(i);

  const int m = static_cast<int>(rest.size());
  Eigen::MatrixXd sub(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) sub(r, c) = chain.generator(rest[r], rest[c]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub);
  Eigen::VectorXd h_rest = lu.solve(Eigen::VectorXd::Constant(m, -1.0));
  if (!h_rest.allFinite() || h_rest.minCoeff() < 0.0)
    throw std::runtime_error("first-passage system is singular; target unreachable?");

  Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) h[rest[r]] = h_rest[r];
  return h;
}

double kac_consistency(const TruncatedChain& chain) {
  if (!is_irreducible(chain)) throw std::runtime_error("truncated chain is not irreducible");
  const int n = static_cast<int>(chain.states.size());
  const Eigen::VectorXd mu_tilde = stationary_distribution(chain).mu_tilde;

  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    // g(j) = expected embedded steps from j to i, for j != i.
    std::vector<int> rest;
    rest.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) rest.push_back(j);
    Eigen::MatrixXd sys(n - 1, n - 1);
    for (int r = 0; r < n - 1; ++r)
      for (int c = 0; c < n - 1; ++c)
        sys(r, c) = (r == c ? 1.0 : 0.0) - chain.embedded(rest[r], rest[c]);
    Eigen::VectorXd g = sys.partialPivLu().solve(Eigen::VectorXd::Ones(n - 1));
    double expected_return = 1.0;
    for (int r = 0; r < n - 1; ++r) expected_return += chain.embedded(i, rest[r]) * g[r];
    worst = std::max(worst, std::abs(mu_tilde[i] * expected_return - 1.0));
  }
  return worst;
}

double zeta_beta(const ModelParams& p) {
  return std::exp(p.beta) /
         (std::exp(p.beta) + std::exp(-p.beta) + 2.0 * (p.n_actors - 1));
}

double exact_m_event_probability(const ModelParams& p, const PressureList& u0, int m) {
  check_state(u0);
  std::unordered_map<std::string, std::pair<PressureList, double>> mass;
  mass[state_key(u0)] = {u0, 1.0};
  for (int step = 0; step < m; ++step) {
    std::unordered_map<std::string, std::pair<PressureList, double>> next;
    for (const auto& [key, entry] : mass) {
      const auto& [u, prob] = entry;
      const double q = total_rate(p, u);
      for (const auto& [a, o] : admissible_moves(u)) {
        const PressureList v = apply_jump(u, a, o);
        const double move_prob = std::exp(log_rate(p, u, a, o)) / q;
        auto [it, inserted] = next.try_emplace(state_key(v), v, 0.0);
        it->second.second += prob * move_prob;
      }
    }
    mass = std::move(next);
  }
  double total = 0.0;
  for (const auto& [key, entry] : mass) total += entry.second;
  return total;
}

namespace {

struct GreedyContext {
  int horizon;  // 3(N-1)
  std::unordered_map<std::string, int> steps_to_ladder;  // horizon+1 = failure
  LemmaReport report;
  PressureList failing_start;
  std::vector<std::pair<int, Opinion>> failing_path;

  // Max over admissible paths of the first step entering the ladder set,
  // horizon+1 if some path is not in the ladder set by the horizon.
  int explore(const PressureList& u, int depth) {
    const auto key = state_key(u);
    if (auto it = steps_to_ladder.find(key); it != steps_to_ladder.end()) return it->second;
    const ClassFlags f = classify(u);
    if (f.ladder_plus || f.ladder_minus) {
      steps_to_ladder[key] = 0;
      return 0;
    }
    if (depth >= horizon) return horizon + 1;  // not memoized: depth-limited
    int worst = 0;
    for (const auto& [a, o] : admissible_moves(u)) {
      const int r = explore(apply_jump(u, a, o), depth + 1);
      worst = std::max(worst, 1 + r);
      if (worst > horizon) return worst;
    }
    steps_to_ladder[key] = worst;
    return worst;
  }

  // Rebuild one failing move sequence for the report.
  void build_failure_path(const PressureList& start) {
    failing_start = start;
    failing_path.clear();
    PressureList u = start;
    for (int step = 0; step < horizon; ++step) {
      const ClassFlags f = classify(u);
      if (f.ladder_plus || f.ladder_minus) break;
      for (const auto& [a, o] : admissible_moves(u)) {
        if (explore(apply_jump(u, a, o), step + 1) + step + 1 > horizon) {
          failing_path.emplace_back(a, o);
          u = apply_jump(u, a, o);
          break;
        }
      }
    }
  }
};

// Every admissible path of exactly `steps` moves from u ends in a state
// satisfying `pred`.
template <typename Pred>
bool all_paths_end_in(const PressureList& u, int steps, const Pred& pred,
                      std::vector<std::pair<int, Opinion>>* path) {
  if (steps == 0) {
    if (pred(classify(u))) return true;
    return false;
  }
  for (const auto& [a, o] : admissible_moves(u)) {
    if (path) path->emplace_back(a, o);
    if (!all_paths_end_in(apply_jump(u, a, o), steps - 1, pred, path)) return false;
    if (path) path->pop_back();
  }
  return true;
}

// Check the tau stage: along every admissible path, at the first step whose
// actor repeats or starts from a zero-pressure actor of u0, the state is in
// S+ or S-. Returns false and fills `path` on violation.
bool check_tau_stage(const PressureList& u0, const PressureList& u,
                     std::vector<bool>& used_actor,
                     std::vector<std::pair<int, Opinion>>& path) {
  for (const auto& [a, o] : admissible_moves(u)) {
    path.emplace_back(a, o);
    const PressureList v = apply_jump(u, a, o);
    const bool stops = used_actor[static_cast<std::size_t>(a - 1)] || u0[a - 1] == 0;
    if (stops) {
      const ClassFlags f = classify(v);
      if (!f.s_plus && !f.s_minus) return false;
    } else {
      used_actor[static_cast<std::size_t>(a - 1)] = true;
      const bool ok = check_tau_stage(u0, v, used_actor, path);
      used_actor[static_cast<std::size_t>(a - 1)] = false;
      if (!ok) return false;
    }
    path.pop_back();
  }
  return true;
}

}  // namespace

LemmaReport greedy_consensus_check(int n_actors, int cap) {
  const std::vector<PressureList> states = enumerate_states(n_actors, cap);
  GreedyContext ctx;
  ctx.horizon = 3 * (n_actors - 1);
  ctx.report.n_states_checked = states.size();

  auto fail = [&](const PressureList& start, std::vector<std::pair<int, Opinion>> path) {
    ctx.report.all_pass = false;
    ctx.report.counterexample = {start, std::move(path)};
  };

  for (const PressureList& start : states) {
    // Main claim: in the ladder set after exactly 3(N-1) admissible moves
    // (equivalent, given ladder closure, to reaching it within the horizon).
    const int needed = ctx.explore(start, 0);
    if (needed > ctx.horizon) {
      ctx.build_failure_path(start);
      fail(ctx.failing_start, ctx.failing_path);
      return ctx.report;
    }
    ctx.report.max_steps_needed = std::max(ctx.report.max_steps_needed, needed);

    const ClassFlags f = classify(start);

    // Ladder closure: admissible moves keep ladder lists on their side.
    if (f.ladder_plus || f.ladder_minus) {
      for (const auto& [a, o] : admissible_moves(start)) {
        const ClassFlags g = classify(apply_jump(start, a, o));
        if ((f.ladder_plus && !g.ladder_plus) || (f.ladder_minus && !g.ladder_minus)) {
          fail(start, {{a, o}});
          return ctx.report;
        }
      }
    }

    // tau stage: S+ or S- at the stopping time, on every admissible path.
    {
      std::vector<bool> used(static_cast<std::size_t>(n_actors), false);
      std::vector<std::pair<int, Opinion>> path;
      if (!check_tau_stage(start, start, used, path)) {
        fail(start, path);
        return ctx.report;
      }
    }

    // Staged list to consensus in n(u)-1 admissible steps.
    for (int sign : {+1, -1}) {
      const int n = staged_n(start, sign);
      if (n == 0) continue;
      std::vector<std::pair<int, Opinion>> path;
      const bool ok = all_paths_end_in(
          start, n - 1,
          [sign](const ClassFlags& g) {
            return sign > 0 ? g.consensus_plus : g.consensus_minus;
          },
          &path);
      if (!ok) {
        fail(start, path);
        return ctx.report;
      }
    }

    // Consensus to ladder in N-1 admissible steps.
    if (f.consensus_plus || f.consensus_minus) {
      std::vector<std::pair<int, Opinion>> path;
      const bool ok = all_paths_end_in(
          start, n_actors - 1,
          [](const ClassFlags& g) { return g.ladder_plus || g.ladder_minus; }, &path);
      if (!ok) {
        fail(start, path);
        return ctx.report;
      }
    }
  }
  return ctx.report;
}

void write_states_csv(std::ostream& os, const TruncatedChain& chain) {
  for (int a = 1; a <= chain.params.n_actors; ++a) os << (a > 1 ? "," : "") << 'u' << a;
  os << '\n';
  for (const PressureList& u : chain.states) {
    for (Eigen::Index i = 0; i < u.size(); ++i) os << (i > 0 ? "," : "") << u[i];
    os << '\n';
  }
}

void write_triplets_csv(std::ostream& os, const TruncatedChain& chain) {
  os << "row,col,rate\n";
  char buf[32];
  const int n = static_cast<int>(chain.states.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || chain.generator(i, j) == 0.0) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", chain.generator(i, j));
      os << i << ',' << j << ',' << buf << '\n';
    }
  }
}

}  // namespace polar
