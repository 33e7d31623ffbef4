#ifndef POLAR_MODEL_HPP
#define POLAR_MODEL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace polar {

// Signed social pressures, one entry per actor. Actor indices are 1-based in
// the public API (matching the usual notation), 0-based in storage.
using PressureList = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// Opinion is +1 (favorable) or -1 (contrary).
enum class Opinion : int { contrary = -1, favorable = +1 };

inline int opinion_sign(Opinion o) { return static_cast<int>(o); }
inline Opinion opinion_from_sign(int s) {
  if (s != 1 && s != -1) throw std::invalid_argument("opinion sign must be +1 or -1");
  return static_cast<Opinion>(s);
}

struct ModelParams {
  int n_actors;
  double beta;

  ModelParams(int n, double b) : n_actors(n), beta(b) {
    if (n < 3) throw std::invalid_argument("n_actors must be >= 3");
    if (!(b >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  }
};

// Class membership flags for a state. The classes overlap, so they are
// independent booleans rather than a partition.
struct ClassFlags {
  bool is_zero = false;
  bool ladder_plus = false;
  bool ladder_minus = false;
  bool consensus_plus = false;
  bool consensus_minus = false;
  bool s_plus = false;
  bool s_minus = false;
  // Maximal n for which the staged-list condition holds, when s_plus or
  // s_minus is set.
  std::optional<int> n_of_u;
};

// True iff some actor carries pressure exactly 0.
bool validate_membership(const PressureList& u);

void check_state(const PressureList& u);

// The jump map: actor a (1-based) resets to 0, every other actor shifts by o.
PressureList apply_jump(const PressureList& u, int actor, Opinion o);

// Natural log of the rate of the (actor, opinion) clock: beta * o * u(a).
double log_rate(const ModelParams& p, const PressureList& u, int actor, Opinion o);

// Log of the total jump rate, sum over all 2N clocks, computed with a stable
// log-sum-exp. Raw exponentials are only used when every exponent is small.
double log_total_rate(const ModelParams& p, const PressureList& u);

// Exponent magnitude below which exp() of a raw log-rate is allowed.
inline constexpr double kDirectExpThreshold = 30.0;

ClassFlags classify(const PressureList& u);

// Maximal n in {1,...,N-1} such that pressures sign*1,...,sign*n are each
// realized and sign*u(a) >= -(n-1) for all actors; 0 when no n qualifies.
int staged_n(const PressureList& u, int sign);

PressureList negate(const PressureList& u);

// Permuted list: result(a) = u(sigma(a)), sigma given 1-based.
PressureList permute(const PressureList& u, const std::vector<int>& sigma);

// Moves (actor, opinion) with |u(actor)| maximal over actors and
// o * u(actor) >= 0. When the maximum is 0 both opinions qualify.
std::vector<std::pair<int, Opinion>> admissible_moves(const PressureList& u);

}  // namespace polar

#endif  // POLAR_MODEL_HPP
