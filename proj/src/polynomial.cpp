#include "wcf/polynomial.hpp"

#include <algorithm>
#include <stdexcept>

namespace wcf {

void Poly::normalize() {
  while (!c.empty() && c.back() == 0) c.pop_back();
}

const Q& Poly::lead() const {
  if (c.empty()) throw std::logic_error("poly: leading coefficient of zero polynomial");
  return c.back();
}

Q Poly::eval(const Q& x) const {
  Q acc(0);
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Poly Poly::derivative() const {
  if (c.size() <= 1) return Poly();
  std::vector<Q> d(c.size() - 1);
  for (size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * Q(static_cast<long>(i));
  return Poly(std::move(d));
}

Poly Poly::shifted(const Q& a) const {
  if (c.empty()) return Poly();
  std::vector<Q> d = c;
  size_t n = d.size();
  for (size_t i = 0; i + 1 < n; ++i)
    for (size_t j = n - 1; j >= i + 1; --j) d[j - 1] += a * d[j];
  return Poly(std::move(d));
}

Poly Poly::operator+(const Poly& o) const {
  std::vector<Q> d(std::max(c.size(), o.c.size()), Q(0));
  for (size_t i = 0; i < c.size(); ++i) d[i] = c[i];
  for (size_t i = 0; i < o.c.size(); ++i) d[i] += o.c[i];
  return Poly(std::move(d));
}

Poly Poly::operator-(const Poly& o) const { return *this + (-o); }

Poly Poly::operator-() const {
  std::vector<Q> d = c;
  for (auto& x : d) x = -x;
  return Poly(std::move(d));
}

Poly Poly::operator*(const Poly& o) const {
  if (c.empty() || o.c.empty()) return Poly();
  std::vector<Q> d(c.size() + o.c.size() - 1, Q(0));
  for (size_t i = 0; i < c.size(); ++i)
    for (size_t j = 0; j < o.c.size(); ++j) d[i + j] += c[i] * o.c[j];
  return Poly(std::move(d));
}

Poly Poly::operator*(const Q& s) const {
  std::vector<Q> d = c;
  for (auto& x : d) x *= s;
  return Poly(std::move(d));
}

namespace {

// Rescales by a positive rational so coefficients become coprime integers.
Poly primitive(const Poly& p) {
  if (p.is_zero()) return p;
  Z l(1);
  for (const auto& x : p.c) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
  Z g(0);
  std::vector<Z> ints(p.c.size());
  for (size_t i = 0; i < p.c.size(); ++i) {
    ints[i] = Z(p.c[i].get_num()) * (l / Z(p.c[i].get_den()));
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), ints[i].get_mpz_t());
  }
  std::vector<Q> d(ints.size());
  for (size_t i = 0; i < ints.size(); ++i) d[i] = Q(ints[i] / g);
  return Poly(std::move(d));
}

// Remainder of a / b over the rationals; b must be nonzero.
Poly poly_rem(const Poly& a, const Poly& b) {
  if (b.is_zero()) throw std::logic_error("poly: division by zero polynomial");
  std::vector<Q> r = a.c;
  long db = b.degree();
  while (static_cast<long>(r.size()) - 1 >= db) {
    long dr = static_cast<long>(r.size()) - 1;
    Q f = r.back() / b.lead();
    for (long i = 0; i <= db; ++i) r[dr - db + i] -= f * b.c[i];
    r.pop_back();
    while (!r.empty() && r.back() == 0) r.pop_back();
    if (r.empty()) break;
  }
  return Poly(std::move(r));
}

// Exact quotient a / b; throws if the division leaves a remainder.
Poly poly_div_exact(const Poly& a, const Poly& b) {
  if (b.is_zero()) throw std::logic_error("poly: division by zero polynomial");
  if (a.is_zero()) return Poly();
  std::vector<Q> r = a.c;
  long db = b.degree();
  long dq = a.degree() - db;
  if (dq < 0) throw std::logic_error("poly: inexact division");
  std::vector<Q> q(dq + 1, Q(0));
  while (static_cast<long>(r.size()) - 1 >= db && !r.empty()) {
    long dr = static_cast<long>(r.size()) - 1;
    Q f = r.back() / b.lead();
    q[dr - db] = f;
    for (long i = 0; i <= db; ++i) r[dr - db + i] -= f * b.c[i];
    r.pop_back();
    while (!r.empty() && r.back() == 0) r.pop_back();
  }
  if (!r.empty()) throw std::logic_error("poly: inexact division");
  return Poly(std::move(q));
}

Poly poly_gcd(Poly a, Poly b) {
  a = primitive(a);
  b = primitive(b);
  while (!b.is_zero()) {
    Poly r = primitive(poly_rem(a, b));
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.is_zero() && sgn(a.lead()) < 0) a = -a;
  return a;
}

// Sturm chain of a squarefree primitive polynomial.
std::vector<Poly> sturm_chain(const Poly& p) {
  std::vector<Poly> s;
  s.push_back(primitive(p));
  if (p.degree() < 1) return s;
  s.push_back(primitive(p.derivative()));
  while (s.back().degree() >= 0) {
    Poly r = poly_rem(s[s.size() - 2], s.back());
    if (r.is_zero()) break;
    s.push_back(primitive(-r));
  }
  return s;
}

int sign_at(const Poly& p, const Q& x) { return sgn(p.eval(x)); }

int sign_at_inf(const Poly& p) { return p.is_zero() ? 0 : sgn(p.lead()); }

// Sign variations with zeros dropped; for a Sturm chain this equals the
// variation count of the right-sided limit at x.
long variations(const std::vector<Poly>& chain, const std::optional<Q>& x) {
  long v = 0;
  int prev = 0;
  for (const auto& p : chain) {
    int s = x ? sign_at(p, *x) : sign_at_inf(p);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++v;
    prev = s;
  }
  return v;
}

long count_roots_sf(const Poly& sf, const Q& a, const std::optional<Q>& b) {
  if (sf.degree() < 1) return 0;
  auto chain = sturm_chain(sf);
  return variations(chain, a) - variations(chain, b);
}

// 1 + max_i |c_i / c_lead|; every real root has absolute value below this.
Q cauchy_bound(const Poly& p) {
  Q m(0);
  for (size_t i = 0; i + 1 < p.c.size(); ++i) {
    Q a = abs(p.c[i] / p.lead());
    if (a > m) m = a;
  }
  return m + 1;
}

Q simplest_in(const Q& lo, const Q& hi) {
  Z cl = q_ceil(lo);
  if (Q(cl) <= hi) return Q(cl);
  Z fl = q_floor(lo);
  Q l = Q(1) / (hi - Q(fl)), h = Q(1) / (lo - Q(fl));
  return Q(fl) + Q(1) / simplest_in(l, h);
}

int lowest_coeff_sign(const Poly& p) {
  for (const auto& x : p.c)
    if (x != 0) return sgn(x);
  return 0;
}

// Isolating intervals (l, r) with rational non-root endpoints, one per root
// of the squarefree polynomial t in (0, bound).
std::vector<std::pair<Q, Q>> isolate_roots(const Poly& t0, const Q& bound) {
  std::vector<std::pair<Q, Q>> out;
  // Strip roots at the origin so 0 is a usable left endpoint.
  Poly t = t0;
  while (!t.is_zero() && t.c[0] == 0) t.c.erase(t.c.begin());
  if (t.degree() < 1) return out;
  auto chain = sturm_chain(t);
  struct Seg {
    Q l, r;
    long n;
  };
  std::vector<Seg> work;
  long total = variations(chain, Q(0)) - variations(chain, bound);
  if (total > 0) work.push_back({Q(0), bound, total});
  while (!work.empty()) {
    Seg s = work.back();
    work.pop_back();
    if (s.n == 0) continue;
    if (s.n == 1 && sign_at(t, s.l) != 0 && sign_at(t, s.r) != 0) {
      out.push_back({s.l, s.r});
      continue;
    }
    Q m = (s.l + s.r) / 2;
    while (sign_at(t, m) == 0) m = (s.l + m) / 2;
    long nl = variations(chain, s.l) - variations(chain, m);
    work.push_back({s.l, m, nl});
    work.push_back({m, s.r, s.n - nl});
  }
  return out;
}

}  // namespace

Poly squarefree_part(const Poly& p) {
  if (p.is_zero() || p.degree() < 1) return primitive(p);
  Poly g = poly_gcd(p, p.derivative());
  if (g.degree() < 1) return primitive(p);
  return primitive(poly_div_exact(primitive(p), g));
}

Poly odd_multiplicity_part(const Poly& p) {
  if (p.is_zero()) return Poly();
  if (p.degree() < 1) return Poly::constant(Q(1));
  Poly f = primitive(p);
  Poly g = poly_gcd(f, f.derivative());
  if (g.degree() < 1) return f;
  Poly ci = poly_div_exact(f, g);
  Poly di = poly_div_exact(f.derivative(), g) - ci.derivative();
  Poly out = Poly::constant(Q(1));
  long i = 1;
  while (ci.degree() >= 1) {
    Poly ai = poly_gcd(ci, di);
    if (i % 2 == 1 && ai.degree() >= 1) out = out * ai;
    Poly cn = poly_div_exact(ci, ai);
    di = poly_div_exact(di, ai) - cn.derivative();
    ci = std::move(cn);
    ++i;
  }
  return primitive(out);
}

Poly clear_denominators(const std::vector<std::pair<Q, Q>>& points) {
  for (size_t i = 0; i < points.size(); ++i) {
    if (points[i].first < 0)
      throw std::invalid_argument("clear_denominators: negative coordinate " + q_str(points[i].first));
    for (size_t j = i + 1; j < points.size(); ++j)
      if (points[i].first == points[j].first)
        throw std::invalid_argument("clear_denominators: duplicate coordinate " + q_str(points[i].first));
  }
  if (points.empty()) return Poly();
  // Full product prod_k (lambda + z_k).
  std::vector<Q> prod{Q(1)};
  for (const auto& [z, d] : points) {
    std::vector<Q> next(prod.size() + 1, Q(0));
    for (size_t i = 0; i < prod.size(); ++i) {
      next[i + 1] += prod[i];
      next[i] += prod[i] * z;
    }
    prod = std::move(next);
  }
  std::vector<Q> acc(points.size(), Q(0));
  for (const auto& [z, d] : points) {
    if (d == 0) continue;
    // Synthetic division of prod by (lambda + z): root at -z.
    size_t n = prod.size() - 1;
    std::vector<Q> quot(n);
    quot[n - 1] = prod[n];
    for (size_t i = n - 1; i >= 1; --i) quot[i - 1] = prod[i] - z * quot[i];
    for (size_t i = 0; i < n; ++i) acc[i] -= d * quot[i];
  }
  return Poly(std::move(acc));
}

SignVerdict sign_on_open_positive_axis(const Poly& n) {
  SignVerdict v;
  if (n.is_zero()) {
    v.nonnegative = true;
    v.strictly_positive = false;
    v.witness = Q(1);
    return v;
  }
  int lead = sgn(n.lead());
  int low = lowest_coeff_sign(n);
  Poly odd = odd_multiplicity_part(n);
  long sign_changes = count_roots_sf(odd, Q(0), std::nullopt);
  v.nonnegative = (sign_changes == 0 && lead > 0 && low > 0);
  Poly sf = squarefree_part(n);
  long zeros = count_roots_sf(sf, Q(0), std::nullopt);
  v.strictly_positive = v.nonnegative && zeros == 0;
  if (v.strictly_positive) return v;

  if (!v.nonnegative) {
    if (low < 0) {
      Q w(1);
      for (int it = 0; it < 100000; ++it) {
        w /= 2;
        if (sgn(n.eval(w)) < 0) {
          v.witness = w;
          return v;
        }
      }
      throw std::logic_error("sign decision: witness search failed");
    }
    if (lead < 0) {
      Q w(1);
      for (int it = 0; it < 100000; ++it) {
        w *= 2;
        if (sgn(n.eval(w)) < 0) {
          v.witness = w;
          return v;
        }
      }
      throw std::logic_error("sign decision: witness search failed");
    }
    // The sign flips at each odd-multiplicity root; bisect towards one until a
    // sample point lands strictly inside the negative stretch.
    Q bound = cauchy_bound(n);
    for (auto [l, r] : isolate_roots(odd, bound)) {
      for (int it = 0; it < 512; ++it) {
        if (sgn(n.eval(l)) < 0) {
          v.witness = l;
          return v;
        }
        if (sgn(n.eval(r)) < 0) {
          v.witness = r;
          return v;
        }
        Q m = (l + r) / 2;
        while (sgn(odd.eval(m)) == 0) m = (l + m) / 2;
        if (sgn(odd.eval(l)) * sgn(odd.eval(m)) < 0)
          r = m;
        else
          l = m;
      }
    }
    throw std::logic_error("sign decision: witness search failed");
  }

  // Nonnegative with zeros in (0, inf): exhibit an exact touching point when
  // one exists at a rational coordinate.
  Q bound = cauchy_bound(sf);
  for (auto [l, r] : isolate_roots(sf, bound)) {
    for (int it = 0; it < 256; ++it) {
      Q m = simplest_in(l, r);
      if (m > l && m < r && sgn(n.eval(m)) == 0) {
        v.witness = m;
        return v;
      }
      Q mid = (l + r) / 2;
      while (sgn(sf.eval(mid)) == 0) mid = (l + mid) / 2;
      if (sgn(sf.eval(mid)) == sgn(sf.eval(r)))
        r = mid;
      else
        l = mid;
    }
  }
  return v;
}

SignVerdict sign_on_shifted_axis(const Poly& n, const Q& lambda0) {
  if (lambda0 < 0) throw std::invalid_argument("sign_on_shifted_axis: negative shift");
  if (lambda0 == 0) return sign_on_open_positive_axis(n);
  SignVerdict v = sign_on_open_positive_axis(n.shifted(lambda0));
  if (v.witness) v.witness = *v.witness + lambda0;
  return v;
}

long sturm_root_count(const Poly& n, const Q& a, const std::optional<Q>& b) {
  if (b && !(a < *b)) throw std::invalid_argument("sturm_root_count: requires a < b");
  if (n.is_zero()) throw std::invalid_argument("sturm_root_count: zero polynomial");
  return count_roots_sf(squarefree_part(n), a, b);
}

}  // namespace wcf
