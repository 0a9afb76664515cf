#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wcf/rational.hpp"

namespace wcf {

// Message game with boom probabilities p_1..p_n. Odd indices belong to
// Alice, even indices to Bob, and the game is forced to end by p_n = 1.
// Probabilities before the last must avoid 0 and 1 so every round moves
// some amplitude and no denominator in the update rules vanishes.
struct DDBGame {
  std::vector<Q> p;
  // True iff both players win the classical game with probability 1/2.
  bool fair = false;

  long n() const { return static_cast<long>(p.size()); }
};

// Validates the probability list and computes the fairness flag.
DDBGame ddb_game(std::vector<Q> p);

// Win and undecided probabilities after each message, index 0..n.
struct DDBRecursion {
  std::vector<Q> pa, pb, pu;
  bool fair = false;
};

DDBRecursion ddb_recursion(const DDBGame& g);

// State of the coherent protocol: Alice's qutrit, the message qubit and
// Bob's qutrit, with amplitudes indexed as (a * 2 + m) * 3 + b for
// a, b in {A, B, U} = {0, 1, 2} and m in {DIP, BOOM} = {0, 1}. Honest
// play keeps every amplitude real and nonnegative.
struct DDBState {
  std::vector<double> amps;
  bool alice_aborted = false;
  bool bob_aborted = false;
};

struct DDBSimulation {
  DDBState final_state;
  // Exact outcome distribution read off the final configuration.
  Q win_a, win_b;
  // Exact probability mass removed by the receivers' message checks.
  Q abort_mass;
  // True when the state after every round reproduced the square roots of
  // the recursion values exactly. Amplitudes are tracked as signed square
  // roots of rationals and compared by their squares, so the comparison
  // carries no floating-point error.
  bool matches_closed_form = false;
};

// Runs the protocol with both players honest.
DDBSimulation ddb_simulate_honest(const DDBGame& g);

// Closed-form certificate value bounding Bob's cheating probability:
// u0 = 2 * sum over even j of p_j * prod_{k<j}(1-p_k) * prod_{odd k<j}(1-p_k).
// The derivation fixes the honest Bob win probability at 1/2, so unfair
// games are refused.
Q ddb_dual_bound_pb(const DDBGame& g);

// Same formula in double precision for parameter lists that are not
// rational. Fairness is required within 1e-9.
double ddb_dual_bound_pb_d(const std::vector<double>& p);

// Exact verification that the diagonal assignment behind the bound
// satisfies every constraint it came from: the odd-step pullback
// inequalities, the even-step two-by-two positivity (determinant and
// diagonal), the monotonicity of the diagonals, and the endpoint value
// b_n = 1. The infinite starting values b_0 = b_1 are tracked through
// their inverses, with 1/b = 0 meaning infinity.
struct DDBCertificate {
  bool accepted = false;
  Q u0;
  std::vector<std::pair<std::string, std::string>> failures;
};

DDBCertificate ddb_dual_certificate_check(const DDBGame& g);

// Heuristic lower bound on Bob's cheating probability. Bob's moves are
// unitaries on the message qubit joined with a nine-dimensional private
// register; each is improved in turn by a polar-decomposition update,
// which never decreases the objective. Requires n <= 7.
struct DDBSeesaw {
  double value = 0;
  bool converged = false;
  long iters = 0;
};

DDBSeesaw ddb_primal_seesaw_pb(const DDBGame& g, long iters, unsigned long seed);
DDBSeesaw ddb_primal_seesaw_pb(const std::vector<double>& p, long iters, unsigned long seed);

}  // namespace wcf
