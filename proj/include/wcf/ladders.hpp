#pragma once

#include <string>
#include <vector>

#include "wcf/games.hpp"
#include "wcf/pointfn.hpp"
#include "wcf/rational.hpp"

namespace wcf {

// Ladder family parameters: rungs of 2k points at lattice spacing eps, rows
// j*eps for j from zstar/eps up to gamma, meeting point (zstar, zstar).
// Constraints: k >= 1, eps > 0 with k*eps < 1/2, gamma > 4k, zstar strictly
// between 1/2 and 1 with zstar/eps an integer.
struct FamilyParams {
  long k = 0;
  Q eps;
  long gamma = 0;
  Q zstar;
};

// Assembled family functions. h and v carry the halved weights, so
// h + v = -1/2[1,0] - 1/2[0,1] + 1[zstar,zstar] and tipg() verifies with
// pa = pb = 1/2.
struct FamilyFns {
  FamilyParams params;
  // Normalization making the axis split weights sum to 1.
  Q C;
  PointFn2D h, v;
  // One entry per checked rung weight whose direct product form disagrees
  // with the interpolation form the builder uses.
  std::vector<std::string> formula_notes;

  Q g(const Q& z) const;
  Q p(const Q& z) const;
  Q D(long i) const;
  TIPG tipg() const;
};

// Weights -f(x_i) / prod_{j != i} (x_j - x_i) placed at the x_i. f_values
// holds f(x_i) for a polynomial with f(-lambda) >= 0 on lambda > 0 and
// degree at most n - 2. The degree bound is detected from the values; the
// sign condition is the caller's certificate, but the assembled line is
// still re-checked and rejected if invalid.
PointFn1D rung_from_polynomial(const std::vector<Q>& xs,
                               const std::vector<Q>& f_values);

// Ladder game on the one-third lattice with rungs four points across, rows
// y = m/3 for m in [3, gamma]. Final point ((2+delta)/3, (2+delta)/3) with
// delta = 8/(3*gamma - 1), so the bias approaches 1/6 from above as gamma
// grows. Requires gamma >= 4.
TIPG build_bias_sixth_tipg(long gamma);

FamilyFns build_family_tipg(const FamilyParams& params);

// Exact evaluation of C * sum_j p(j*eps)/(j*eps) <= 1 over the support
// rows; false when the support is empty.
bool check_family_feasibility(const FamilyParams& params);

// Fixes zstar = continuum_cutoff(k) + gap, then sweeps eps = zstar/J with J
// doubling and gamma = 4k * 2^j geometrically, returning the first feasible
// parameter set in lexicographic (J, j) order. Throws when the budget is
// exhausted.
FamilyParams search_family_params(long k, const Q& gap);

// (k + 1) / (2k + 1), the smallest meeting coordinate the family can
// approach for a given k.
Q continuum_cutoff(long k);

}  // namespace wcf
