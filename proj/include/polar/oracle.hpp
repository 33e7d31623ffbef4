#ifndef POLAR_ORACLE_HPP
#define POLAR_ORACLE_HPP

#include "polar/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace polar {

// Finite window of the state space: lists with min |u(a)| = 0 and
// max |u(a)| <= cap, in lexicographic order. Jumps whose image leaves the
// window are clamped coordinate-wise to [-cap, cap]; clamped self-loops are
// dropped. Only the recurrent class containing the zero list is kept: the
// clamped window has a fringe of states that no jump can enter, and the
// stationary/return-time analyses are about the recurrent part.
struct TruncatedChain {
  TruncatedChain(const ModelParams& p, int c) : params(p), cap(c) {}

  ModelParams params;
  int cap;
  std::vector<PressureList> states;
  Eigen::MatrixXd generator;  // off-diagonal rates, diagonal = -row sum
  Eigen::MatrixXd embedded;   // row-stochastic jump matrix
  Eigen::VectorXd exit_rate;  // row sums of off-diagonal generator entries

  std::optional<int> index_of(const PressureList& u) const;

 private:
  friend TruncatedChain build_generator(const ModelParams&, int);
  std::unordered_map<std::string, int> index_;
};

std::vector<PressureList> enumerate_states(int n_actors, int cap);

TruncatedChain build_generator(const ModelParams& p, int cap);

bool is_irreducible(const TruncatedChain& chain);

struct StationaryPair {
  Eigen::VectorXd mu;        // continuous-time invariant measure, mu Q = 0
  Eigen::VectorXd mu_tilde;  // embedded-chain invariant measure, mu~ P = mu~
  double residual_mu;
  double residual_mu_tilde;
};

StationaryPair stationary_distribution(const TruncatedChain& chain);

// First-passage times of the continuous chain: h = 0 on the target,
// Q h = -1 elsewhere. `target` holds state indices.
Eigen::VectorXd expected_hitting_times(const TruncatedChain& chain,
                                       const std::vector<int>& target);

// max over states of |mu~(u) * E[R~(u)] - 1|, the Kac identity on the
// embedded chain, with the return times from independent linear solves.
double kac_consistency(const TruncatedChain& chain);

// Exact P(first m events are all admissible-move events) from start u0,
// propagating mass through the restricted jump kernel. States are expanded
// on the fly, so the result is exact (no truncation within m steps).
double exact_m_event_probability(const ModelParams& p, const PressureList& u0, int m);

// Worst-case single-step admissible-move probability (attained at lists like
// (1,0,...,0)).
double zeta_beta(const ModelParams& p);

struct LemmaReport {
  std::uint64_t n_states_checked = 0;
  int max_steps_needed = 0;
  bool all_pass = true;
  std::optional<std::pair<PressureList, std::vector<std::pair<int, Opinion>>>> counterexample;
};

// Bounded-exhaustive verification of the forced-consensus claims: from every
// state in the window, every sequence of admissible moves is in the ladder
// set after 3(N-1) steps, passing through the staged sets on the way
// (S+/S- by the stopping time tau, consensus within n(u)-1 more admissible
// steps, ladder within N-1 further ones), and ladder lists are closed under
// admissible moves.
LemmaReport greedy_consensus_check(int n_actors, int cap);

// CSV exports: one row per state (u1..uN), and (row, col, rate) triplets.
void write_states_csv(std::ostream& os, const TruncatedChain& chain);
void write_triplets_csv(std::ostream& os, const TruncatedChain& chain);

}  // namespace polar

#endif  // POLAR_ORACLE_HPP
