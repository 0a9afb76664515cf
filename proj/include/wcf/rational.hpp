#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wcf {

using Q = mpq_class;
using Z = mpz_class;

// Parses "a/b" or "a" (optional leading '-') into a reduced rational with
// positive denominator.
Q q_parse(const std::string& s);

// Serializes reduced, "a/b" or "a" when the denominator is 1.
std::string q_str(const Q& q);

inline Q q(long n, long d = 1) {
  if (d == 0) throw std::invalid_argument("rational: zero denominator");
  Q r(n, d);
  r.canonicalize();
  return r;
}

inline int q_sign(const Q& x) { return sgn(x); }

inline Q q_abs(const Q& x) { return abs(x); }

inline Z q_floor(const Q& x) {
  Z r;
  mpz_fdiv_q(r.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return r;
}

inline Z q_ceil(const Q& x) {
  Z r;
  mpz_cdiv_q(r.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  return r;
}

inline double q_double(const Q& x) { return x.get_d(); }

Q q_pow(const Q& base, unsigned long e);

// Best rational approximation to x with denominator <= den_bound, via
// continued fractions.
Q rationalize(double x, unsigned long den_bound);

}  // namespace wcf
