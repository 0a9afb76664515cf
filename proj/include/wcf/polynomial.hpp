#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "wcf/rational.hpp"

namespace wcf {

// Univariate polynomial with rational coefficients, ascending degree order,
// no trailing zero coefficients (zero polynomial has empty coefficient list).
struct Poly {
  std::vector<Q> c;

  Poly() = default;
  explicit Poly(std::vector<Q> coeffs) : c(std::move(coeffs)) { normalize(); }
  static Poly constant(const Q& v) { return Poly(std::vector<Q>{v}); }

  void normalize();
  bool is_zero() const { return c.empty(); }
  // Degree of the zero polynomial is -1.
  long degree() const { return static_cast<long>(c.size()) - 1; }
  const Q& lead() const;

  Q eval(const Q& x) const;
  Poly derivative() const;
  // Returns p(x + a).
  Poly shifted(const Q& a) const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(const Q& s) const;
  Poly operator-() const;
  bool operator==(const Poly& o) const { return c == o.c; }
};

struct SignVerdict {
  bool nonnegative = false;
  bool strictly_positive = false;
  // A point where the polynomial is negative (nonnegative == false) or zero
  // (strictly_positive == false). Absent when both flags hold, or when the
  // only zeros in (0, inf) are irrational so no rational point witnesses
  // them exactly.
  std::optional<Q> witness;
};

// Numerator N(lambda) = sum_j (-d_j) * prod_{k != j} (lambda + z_k) of
// sum_j (-1/(lambda+z_j)) d_j over the common denominator prod_k(lambda+z_k).
// Throws on duplicate or negative z values.
Poly clear_denominators(const std::vector<std::pair<Q, Q>>& points);

// Exact sign decision on the open interval (0, inf).
SignVerdict sign_on_open_positive_axis(const Poly& n);

// Exact sign decision on (lambda0, inf); lambda0 = 0 reduces to the above.
SignVerdict sign_on_shifted_axis(const Poly& n, const Q& lambda0);

// Number of distinct real roots in (a, b]; b absent means +inf.
long sturm_root_count(const Poly& n, const Q& a, const std::optional<Q>& b);

// Squarefree part (product of distinct irreducible factors, each once).
Poly squarefree_part(const Poly& p);

// Product of the squarefree factors of odd multiplicity; its real roots are
// exactly the points where p changes sign.
Poly odd_multiplicity_part(const Poly& p);

}  // namespace wcf
