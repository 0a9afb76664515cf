#include "wcf/ladders.hpp"

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace wcf {

namespace {

void need(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void validate_family_params(const FamilyParams& fp) {
  need(fp.k >= 1, "family: k must be a positive integer");
  need(fp.eps > 0, "family: eps must be positive");
  need(Q(fp.k) * fp.eps < q(1, 2), "family: k * eps must stay below 1/2");
  need(fp.gamma > 4 * fp.k, "family: gamma must exceed 4k");
  need(fp.zstar > q(1, 2) && fp.zstar < 1,
       "family: zstar must lie strictly between 1/2 and 1");
  const Q j0 = fp.zstar / fp.eps;
  need(j0.get_den() == 1, "family: zstar/eps must be an integer");
  need(j0.get_num().fits_slong_p(), "family: zstar/eps is out of range");
}

// First support row index, zstar/eps; valid params only.
long support_start(const FamilyParams& fp) {
  const Q j0 = fp.zstar / fp.eps;
  return j0.get_num().get_si();
}

Q family_g(const FamilyParams& fp, const Q& z) {
  Q r(1);
  for (long j = 1; j <= fp.k - 1; ++j) {
    const Q root = fp.zstar - Q(j) * fp.eps;
    r *= (root - z) / root;
  }
  for (long j = 1; j <= fp.k; ++j) {
    const Q root = Q(fp.gamma + j) * fp.eps;
    r *= (root - z) / root;
  }
  return r;
}

Q family_p(const FamilyParams& fp, const Q& z) {
  Q r = family_g(fp, z);
  if (fp.k % 2 == 0) r = -r;
  for (long j = -fp.k; j <= fp.k; ++j) {
    const Q den = z + Q(j) * fp.eps;
    need(den != 0, "family: p has a pole at z = " + q_str(z));
    r /= den;
  }
  return r;
}

Q family_D(const FamilyParams& fp, long i) {
  need(i >= -fp.k && i <= fp.k, "family: D offset out of range");
  Q r = q_pow(fp.eps, static_cast<unsigned long>(2 * fp.k - 1));
  for (long l = -fp.k; l <= fp.k; ++l) {
    if (l == i) continue;
    r *= Q(l - i);
  }
  return r;
}

}  // namespace

Q FamilyFns::g(const Q& z) const { return family_g(params, z); }

Q FamilyFns::p(const Q& z) const { return family_p(params, z); }

Q FamilyFns::D(long i) const { return family_D(params, i); }

TIPG FamilyFns::tipg() const { return TIPG{h, v, q(1, 2), q(1, 2)}; }

Q continuum_cutoff(long k) {
  if (k < 1) throw std::invalid_argument("continuum_cutoff: k must be at least 1");
  return q(k + 1, 2 * k + 1);
}

PointFn1D rung_from_polynomial(const std::vector<Q>& xs,
                               const std::vector<Q>& f_values) {
  need(xs.size() >= 2, "rung: need at least two points");
  need(xs.size() == f_values.size(), "rung: need one value per point");
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i < n; ++i) {
    need(xs[i] >= 0, "rung: points must be nonnegative");
    for (std::size_t j = i + 1; j < n; ++j)
      need(xs[i] != xs[j], "rung: duplicate point " + q_str(xs[i]));
  }
  PointFn1D p;
  Q total(0);
  for (std::size_t i = 0; i < n; ++i) {
    Q prod(1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) prod *= xs[j] - xs[i];
    const Q w = -f_values[i] / prod;
    total += w;
    p.add(xs[i], w);
  }
  if (total != 0)
    throw std::invalid_argument(
        "rung: values interpolate to degree n - 1; degree at most n - 2 is "
        "required");
  const LineVerdict v = check_valid_fn_1d(p, Q(0), false);
  if (!v.accepted)
    throw std::invalid_argument("rung: line function is not valid: " +
                                v.diagnostic);
  return p;
}

TIPG build_bias_sixth_tipg(long gamma) {
  if (gamma < 4)
    throw std::invalid_argument(
        "build_bias_sixth_tipg: gamma must be at least 4");
  const Q C =
      q(36) / (Q(gamma) * Q(gamma + 1) * Q(gamma - 2) * Q(gamma - 1));
  auto f = [&](const Q& x, const Q& y) -> Q {
    return C * (q(gamma + 1, 3) - x) * (q(gamma + 2, 3) - x) *
           (q(gamma + 1, 3) - y) * (q(gamma + 2, 3) - y);
  };
  PointFn2D h;
  for (long m = 3; m <= gamma; ++m) {
    const Q y = q(m, 3);
    const std::vector<Q> xs = {q(m - 2, 3), q(m - 1, 3), q(m + 1, 3),
                               q(m + 2, 3)};
    std::vector<Q> fv;
    fv.reserve(xs.size());
    for (const Q& x : xs) fv.push_back(f(x, y));
    const PointFn1D rung = rung_from_polynomial(xs, fv);
    for (const auto& [x, wgt] : rung.w) h.add(x, y, wgt);
  }
  const Q half = q(1, 2);
  const Q third2 = q(2, 3);
  const Q one(1);
  const Q lad_23_1 = h.at(third2, one);
  const Q lad_23_43 = h.at(third2, q(4, 3));
  const Q delta = q(8, 3 * gamma - 1);
  const Q zf = (Q(2) + delta) / 3;
  h.add(Q(0), one, -half);
  h.add(q(1, 3), one, one);
  h.add(third2, one, -half);
  h.add(zf, third2, half);
  h.add(one, third2, half - lad_23_1);
  h.add(q(4, 3), third2, -lad_23_43);
  h.add(third2, zf, -half);
  h.add(zf, zf, half);
  return TIPG{h, h.transposed(), half, half};
}

FamilyFns build_family_tipg(const FamilyParams& params) {
  validate_family_params(params);
  FamilyFns F;
  F.params = params;
  const long k = params.k;
  const long J = support_start(params);
  const long G = params.gamma;
  need(G >= J, "family: no rows between zstar/eps and gamma");

  const long lo = J - k;
  std::vector<Q> lat(static_cast<std::size_t>(G + k - lo + 1));
  std::vector<Q> gv(lat.size());
  for (long m = lo; m <= G + k; ++m) {
    lat[m - lo] = Q(m) * params.eps;
    gv[m - lo] = family_g(params, lat[m - lo]);
  }
  auto zat = [&](long m) -> const Q& { return lat[m - lo]; };
  auto gat = [&](long m) -> const Q& { return gv[m - lo]; };

  std::vector<Q> pv(static_cast<std::size_t>(G - J + 1));
  Q s0(0);
  for (long j = J; j <= G; ++j) {
    pv[j - J] = family_p(params, zat(j));
    s0 += pv[j - J];
  }
  need(s0 > 0, "family: split weights must have a positive total");
  F.C = Q(1) / s0;

  // Doubled weights, halved at the end.
  PointFn2D H;
  H.add(Q(1), Q(0), Q(-1));
  for (long j = J; j <= G; ++j) H.add(zat(j), Q(0), F.C * pv[j - J]);
  H.add(params.zstar - Q(k) * params.eps, params.zstar, Q(-1));
  H.add(params.zstar, params.zstar, Q(1));

  const Q sgn_k1 = (k % 2 == 1) ? Q(1) : Q(-1);
  const Q sgn_k = -sgn_k1;
  const long mid = J + (G - J) / 2;
  for (long j = J; j <= G; ++j) {
    const Q& y = zat(j);
    std::vector<Q> xs, fv;
    xs.reserve(static_cast<std::size_t>(2 * k + 1));
    fv.reserve(xs.capacity());
    const Q row = sgn_k1 * gat(j) / y;
    xs.push_back(Q(0));
    fv.push_back(row);
    for (long i = -k; i <= k; ++i) {
      if (i == 0) continue;
      xs.push_back(zat(j + i));
      fv.push_back(row * gat(j + i));
    }
    const PointFn1D rung = rung_from_polynomial(xs, fv);
    for (const auto& [x, wgt] : rung.w) H.add(x, y, F.C * wgt);
    if (j == J || j == mid) {
      for (long i = -k; i <= k; ++i) {
        if (i == 0) continue;
        const Q direct =
            sgn_k * gat(j + i) * gat(j) / (y * zat(j + i) * family_D(params, i));
        const Q used = rung.at(zat(j + i));
        if (direct != used) {
          std::ostringstream os;
          os << "row j=" << j << ", offset i=" << i << ": direct product form "
             << q_str(direct) << ", interpolation form " << q_str(used)
             << "; interpolation form used";
          F.formula_notes.push_back(os.str());
        }
      }
    }
  }
  F.h = scale_fn(H, q(1, 2));
  F.v = F.h.transposed();
  return F;
}

bool check_family_feasibility(const FamilyParams& params) {
  validate_family_params(params);
  const long J = support_start(params);
  if (params.gamma < J) return false;
  Q s0(0), s1(0);
  for (long j = J; j <= params.gamma; ++j) {
    const Q z = Q(j) * params.eps;
    const Q pj = family_p(params, z);
    s0 += pj;
    s1 += pj / z;
  }
  return s1 <= s0;
}

FamilyParams search_family_params(long k, const Q& gap) {
  if (k < 1)
    throw std::invalid_argument("search_family_params: k must be at least 1");
  if (gap <= 0)
    throw std::invalid_argument(
        "search_family_params: gap must be positive; the cutoff is only "
        "approached in the limit");
  const Q zs = continuum_cutoff(k) + gap;
  if (zs >= 1)
    throw std::invalid_argument(
        "search_family_params: gap places zstar at or above 1");
  long tested = 0;
  for (long J = 2 * k; J <= (1L << 12) * k; J *= 2) {
    for (long G = 8 * k; G <= (1L << 15) * k; G *= 2) {
      if (G < J) continue;
      if (G > 64 * J) break;
      FamilyParams fp{k, zs / Q(J), G, zs};
      ++tested;
      if (check_family_feasibility(fp)) return fp;
    }
  }
  std::ostringstream os;
  os << "search_family_params: budget exhausted after " << tested
     << " feasibility tests (k=" << k << ", gap=" << q_str(gap) << ")";
  throw std::runtime_error(os.str());
}

}  // namespace wcf
