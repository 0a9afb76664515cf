#include "wcf/rational.hpp"

#include <cmath>

namespace wcf {

Q q_parse(const std::string& s) {
  auto bad = [&]() { return std::invalid_argument("rational: cannot parse '" + s + "'"); };
  if (s.empty()) throw bad();
  std::string num = s, den = "1";
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    num = s.substr(0, slash);
    den = s.substr(slash + 1);
    if (num.empty() || den.empty() || den.find('/') != std::string::npos) throw bad();
  }
  Z n, d;
  try {
    n = Z(num);
    d = Z(den);
  } catch (const std::exception&) {
    throw bad();
  }
  if (d == 0) throw std::invalid_argument("rational: zero denominator in '" + s + "'");
  Q r(n, d);
  r.canonicalize();
  return r;
}

std::string q_str(const Q& q) { return q.get_str(); }

Q q_pow(const Q& base, unsigned long e) {
  Q acc(1), b(base);
  while (e) {
    if (e & 1) acc *= b;
    b *= b;
    e >>= 1;
  }
  return acc;
}

Q rationalize(double x, unsigned long den_bound) {
  if (!std::isfinite(x)) throw std::invalid_argument("rationalize: non-finite input");
  bool neg = x < 0;
  double v = neg ? -x : x;
  // Continued fraction convergents p/q until the denominator bound.
  Z p0(0), q0(1), p1(1), q1(0);
  double r = v;
  for (int it = 0; it < 64; ++it) {
    double fa = std::floor(r);
    if (fa > 1e18) break;
    Z a(static_cast<unsigned long>(fa));
    Z p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > Z(den_bound)) {
      // Largest admissible semiconvergent.
      if (q1 == 0) break;
      Z amax = (Z(den_bound) - q0) / q1;
      if (amax > 0) {
        Z ps = amax * p1 + p0, qs = amax * q1 + q0;
        Q cand(ps, qs), best(p1, q1);
        cand.canonicalize();
        best.canonicalize();
        if (std::abs(q_double(cand) - v) < std::abs(q_double(best) - v)) {
          p1 = ps;
          q1 = qs;
        }
      }
      break;
    }
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    double frac = r - fa;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  if (q1 == 0) {
    p1 = p0;
    q1 = q0;
  }
  Q out(neg ? Z(-p1) : p1, q1);
  out.canonicalize();
  return out;
}

}  // namespace wcf
