#include "wcf/ddb.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wcf {

namespace {

void validate_p(const std::vector<Q>& p) {
  if (p.empty()) throw std::invalid_argument("ddb: need at least one message probability");
  for (const Q& x : p)
    if (x < 0 || x > 1) throw std::invalid_argument("ddb: probabilities must lie in [0, 1]");
  if (p.back() != 1) throw std::invalid_argument("ddb: the last probability must be 1");
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (p[i] == 0 || p[i] == 1)
      throw std::invalid_argument("ddb: probabilities before the last must avoid 0 and 1");
}

DDBRecursion recursion_from_p(const std::vector<Q>& p) {
  const long n = static_cast<long>(p.size());
  DDBRecursion rec;
  rec.pa.assign(n + 1, Q(0));
  rec.pb.assign(n + 1, Q(0));
  rec.pu.assign(n + 1, Q(0));
  rec.pu[0] = 1;
  for (long i = 1; i <= n; ++i) {
    const Q& pi = p[i - 1];
    rec.pa[i] = rec.pa[i - 1];
    rec.pb[i] = rec.pb[i - 1];
    if (i % 2 == 1)
      rec.pa[i] += pi * rec.pu[i - 1];
    else
      rec.pb[i] += pi * rec.pu[i - 1];
    rec.pu[i] = (1 - pi) * rec.pu[i - 1];
  }
  rec.fair = rec.pa[n] == q(1, 2) && rec.pb[n] == q(1, 2);
  return rec;
}

// Signed square root of a rational, sg in {-1, 0, 1} with sg == 0 iff the
// radicand is zero.
struct SqrtQ {
  int sg = 0;
  Q r = Q(0);
};

SqrtQ sq_scale(const SqrtQ& x, const Q& f) {
  if (x.sg == 0 || f == 0) return SqrtQ{};
  return SqrtQ{x.sg, x.r * f};
}

SqrtQ sq_neg(const SqrtQ& x) { return SqrtQ{-x.sg, x.r}; }

// Addition stays inside the square-root field only when the product of the
// radicands is a perfect square; the honest protocol always combines
// amplitudes sharing such a factor.
SqrtQ sq_add(const SqrtQ& x, const SqrtQ& y) {
  if (x.sg == 0) return y;
  if (y.sg == 0) return x;
  const Q prod = x.r * y.r;
  const mpz_class& pn = prod.get_num();
  const mpz_class& pd = prod.get_den();
  if (!mpz_perfect_square_p(pn.get_mpz_t()) || !mpz_perfect_square_p(pd.get_mpz_t()))
    throw std::logic_error("ddb: amplitude addition left the square-root field");
  mpz_class sn, sd;
  mpz_sqrt(sn.get_mpz_t(), pn.get_mpz_t());
  mpz_sqrt(sd.get_mpz_t(), pd.get_mpz_t());
  const Q cross(sn, sd);
  if (x.sg != y.sg && x.r == y.r) return SqrtQ{};
  const Q rad = x.r + y.r + Q(2 * x.sg * y.sg) * cross;
  const int sg = (x.sg == y.sg) ? x.sg : (x.r > y.r ? x.sg : y.sg);
  return SqrtQ{sg, rad};
}

int amp_index(int a, int m, int b) { return (a * 2 + m) * 3 + b; }

// In-plane rotation by parameter eps: the first state keeps sqrt(1 - eps)
// of itself and receives -sqrt(eps) of the second, the second receives
// sqrt(eps) of the first and keeps sqrt(1 - eps).
void sq_rotate(std::array<SqrtQ, 18>& st, int i1, int i2, const Q& eps) {
  const Q keep = 1 - eps;
  const SqrtQ a = st[i1];
  const SqrtQ b = st[i2];
  st[i1] = sq_add(sq_scale(a, keep), sq_neg(sq_scale(b, eps)));
  st[i2] = sq_add(sq_scale(a, eps), sq_scale(b, keep));
}

bool amp_is_root_of(const SqrtQ& x, const Q& target) {
  if (target == 0) return x.sg == 0;
  return x.sg == 1 && x.r == target;
}

void validate_p_d(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("ddb: need at least one message probability");
  for (double x : p)
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("ddb: probabilities must lie in [0, 1]");
  if (std::abs(p.back() - 1.0) > 1e-12)
    throw std::invalid_argument("ddb: the last probability must be 1");
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (p[i] <= 0.0 || p[i] >= 1.0)
      throw std::invalid_argument("ddb: probabilities before the last must avoid 0 and 1");
}

struct RecD {
  std::vector<double> pa, pb, pu;
};

RecD recursion_d(const std::vector<double>& p) {
  const long n = static_cast<long>(p.size());
  RecD rec;
  rec.pa.assign(n + 1, 0.0);
  rec.pb.assign(n + 1, 0.0);
  rec.pu.assign(n + 1, 0.0);
  rec.pu[0] = 1.0;
  for (long i = 1; i <= n; ++i) {
    rec.pa[i] = rec.pa[i - 1];
    rec.pb[i] = rec.pb[i - 1];
    if (i % 2 == 1)
      rec.pa[i] += p[i - 1] * rec.pu[i - 1];
    else
      rec.pb[i] += p[i - 1] * rec.pu[i - 1];
    rec.pu[i] = (1.0 - p[i - 1]) * rec.pu[i - 1];
  }
  return rec;
}

}  // namespace

DDBGame ddb_game(std::vector<Q> p) {
  validate_p(p);
  DDBGame g;
  g.fair = recursion_from_p(p).fair;
  g.p = std::move(p);
  return g;
}

DDBRecursion ddb_recursion(const DDBGame& g) {
  validate_p(g.p);
  return recursion_from_p(g.p);
}

DDBSimulation ddb_simulate_honest(const DDBGame& g) {
  validate_p(g.p);
  const DDBRecursion rec = recursion_from_p(g.p);
  const long n = g.n();
  std::array<SqrtQ, 18> st{};
  st[amp_index(2, 0, 2)] = SqrtQ{1, Q(1)};
  Q abort_mass(0);
  bool match = true;
  for (long i = 1; i <= n; ++i) {
    const Q& pi = g.p[i - 1];
    if (i % 2 == 1) {
      for (int b = 0; b < 3; ++b) sq_rotate(st, amp_index(2, 0, b), amp_index(0, 1, b), pi);
      const Q et = pi * rec.pu[i - 1] / rec.pa[i];
      for (int a = 0; a < 3; ++a) sq_rotate(st, amp_index(a, 1, 2), amp_index(a, 0, 0), et);
    } else {
      for (int a = 0; a < 3; ++a) sq_rotate(st, amp_index(a, 0, 2), amp_index(a, 1, 1), pi);
      const Q et = pi * rec.pu[i - 1] / rec.pb[i];
      for (int b = 0; b < 3; ++b) sq_rotate(st, amp_index(2, 1, b), amp_index(1, 0, b), et);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        SqrtQ& boom = st[amp_index(a, 1, b)];
        if (boom.sg != 0) abort_mass += boom.r;
        boom = SqrtQ{};
      }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const SqrtQ& amp = st[amp_index(a, 0, b)];
        if (a == 0 && b == 0)
          match = match && amp_is_root_of(amp, rec.pa[i]);
        else if (a == 1 && b == 1)
          match = match && amp_is_root_of(amp, rec.pb[i]);
        else if (a == 2 && b == 2)
          match = match && amp_is_root_of(amp, rec.pu[i]);
        else
          match = match && amp.sg == 0;
      }
  }
  DDBSimulation sim;
  sim.final_state.amps.assign(18, 0.0);
  for (int k = 0; k < 18; ++k)
    if (st[k].sg != 0) sim.final_state.amps[k] = st[k].sg * std::sqrt(st[k].r.get_d());
  sim.win_a = st[amp_index(0, 0, 0)].sg != 0 ? st[amp_index(0, 0, 0)].r : Q(0);
  sim.win_b = st[amp_index(1, 0, 1)].sg != 0 ? st[amp_index(1, 0, 1)].r : Q(0);
  sim.abort_mass = abort_mass;
  sim.matches_closed_form = match;
  return sim;
}

Q ddb_dual_bound_pb(const DDBGame& g) {
  validate_p(g.p);
  if (!recursion_from_p(g.p).fair)
    throw std::invalid_argument(
        "ddb_dual_bound_pb: the game is not fair; the formula fixes Bob's honest win "
        "probability at 1/2");
  Q total(0), full(1), oddprod(1);
  for (long j = 1; j <= g.n(); ++j) {
    const Q& pj = g.p[j - 1];
    if (j % 2 == 0) total += pj * full * oddprod;
    full *= 1 - pj;
    if (j % 2 == 1) oddprod *= 1 - pj;
  }
  return 2 * total;
}

double ddb_dual_bound_pb_d(const std::vector<double>& p) {
  validate_p_d(p);
  const RecD rec = recursion_d(p);
  const long n = static_cast<long>(p.size());
  if (std::abs(rec.pa[n] - 0.5) > 1e-9 || std::abs(rec.pb[n] - 0.5) > 1e-9)
    throw std::invalid_argument(
        "ddb_dual_bound_pb: the game is not fair; the formula fixes Bob's honest win "
        "probability at 1/2");
  double total = 0.0, full = 1.0, oddprod = 1.0;
  for (long j = 1; j <= n; ++j) {
    if (j % 2 == 0) total += p[j - 1] * full * oddprod;
    full *= 1.0 - p[j - 1];
    if (j % 2 == 1) oddprod *= 1.0 - p[j - 1];
  }
  return 2.0 * total;
}

DDBCertificate ddb_dual_certificate_check(const DDBGame& g) {
  validate_p(g.p);
  DDBCertificate rep;
  const DDBRecursion rec = recursion_from_p(g.p);
  if (!rec.fair) {
    rep.failures.emplace_back("fairness", "both honest win probabilities must be 1/2");
    return rep;
  }
  const long n = g.n();
  rep.u0 = ddb_dual_bound_pb(g);

  std::vector<Q> u(n + 1);
  u[0] = rep.u0;
  for (long i = 1; i <= n; ++i) {
    if (i % 2 == 1 && i < n)
      u[i] = u[i - 1] / (1 - g.p[i - 1]);
    else
      u[i] = u[i - 1];
  }
  const Q a(0);
  // Inverses of the winning diagonal, with 0 standing for an infinite entry.
  std::vector<Q> vb(n + 1, Q(0));
  for (long i = 2; i <= n; ++i) {
    if (i % 2 == 0) {
      const Q ptil = g.p[i - 1] * rec.pu[i - 1] / rec.pb[i];
      vb[i] = ptil / u[i - 1] + (1 - ptil) * vb[i - 1];
    } else {
      vb[i] = vb[i - 1];
    }
  }

  auto fail = [&rep](long i, const std::string& what) {
    rep.failures.emplace_back("step " + std::to_string(i), what);
  };
  for (long i = 1; i <= n; ++i) {
    const Q& pi = g.p[i - 1];
    if (i % 2 == 1) {
      const Q pulled = (1 - pi) * u[i] + pi * a;
      if (u[i - 1] < pulled) fail(i, "undecided diagonal fell below its pullback");
      if (vb[i] != vb[i - 1]) fail(i, "winning diagonal changed on an odd step");
    } else {
      if (u[i - 1] < u[i]) fail(i, "undecided diagonal increased");
      const Q ptil = pi * rec.pu[i - 1] / rec.pb[i];
      if (ptil < 0 || ptil > 1) fail(i, "rotation parameter outside [0, 1]");
      if (vb[i] == 0) {
        fail(i, "winning diagonal stayed infinite past the first even step");
        continue;
      }
      const Q bi = 1 / vb[i];
      if (vb[i - 1] == 0) {
        // Infinite previous entry: the quadratic form is nonnegative exactly
        // when the remaining finite diagonal is.
        if (u[i - 1] - ptil * bi < 0) fail(i, "two-by-two diagonal negative");
      } else {
        const Q bprev = 1 / vb[i - 1];
        const Q d1 = bprev - (1 - ptil) * bi;
        const Q d2 = u[i - 1] - ptil * bi;
        if (d1 < 0 || d2 < 0) fail(i, "two-by-two diagonal negative");
        const Q det = d1 * d2 - ptil * (1 - ptil) * bi * bi;
        if (det < 0) fail(i, "two-by-two determinant negative");
      }
    }
  }
  if (vb[n] == 0 || 1 / vb[n] != 1)
    rep.failures.emplace_back("endpoint", "the winning diagonal must end at exactly 1");
  if (u[n] < 0) rep.failures.emplace_back("endpoint", "the undecided diagonal must stay nonnegative");
  rep.accepted = rep.failures.empty();
  return rep;
}

namespace {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

constexpr int kDimB = 9;
constexpr int kDimMB = 2 * kDimB;
constexpr int kDim = 3 * kDimMB;

int seesaw_flat(int a, int m, int b) { return (a * 2 + m) * kDimB + b; }

// Plane rotation on Alice's qutrit and the message, embedded into the full
// space. Indices are (a, m) pairs flattened as a * 2 + m.
CMat embedded_rotation(int am1, int am2, double eps) {
  if (eps < 0.0) eps = 0.0;
  if (eps > 1.0) eps = 1.0;
  const double c = std::sqrt(1.0 - eps);
  const double s = std::sqrt(eps);
  Eigen::Matrix<double, 6, 6> r6 = Eigen::Matrix<double, 6, 6>::Identity();
  r6(am1, am1) = c;
  r6(am1, am2) = -s;
  r6(am2, am1) = s;
  r6(am2, am2) = c;
  CMat full = CMat::Zero(kDim, kDim);
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y) {
      if (r6(x, y) == 0.0) continue;
      for (int b = 0; b < kDimB; ++b)
        full(seesaw_flat(x / 2, x % 2, b), seesaw_flat(y / 2, y % 2, b)) = r6(x, y);
    }
  return full;
}

CMat message_keep_projector() {
  CMat full = CMat::Zero(kDim, kDim);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < kDimB; ++b)
      full(seesaw_flat(a, 0, b), seesaw_flat(a, 0, b)) = 1.0;
  return full;
}

CMat embed_slot(const CMat& u) {
  CMat full = CMat::Zero(kDim, kDim);
  for (int a = 0; a < 3; ++a) full.block(a * kDimMB, a * kDimMB, kDimMB, kDimMB) = u;
  return full;
}

}  // namespace

DDBSeesaw ddb_primal_seesaw_pb(const std::vector<double>& p, long iters, unsigned long seed) {
  validate_p_d(p);
  const long n = static_cast<long>(p.size());
  if (n > 7) throw std::invalid_argument("ddb_primal_seesaw_pb: n must be at most 7");
  if (iters < 0) throw std::invalid_argument("ddb_primal_seesaw_pb: iters must be nonnegative");
  const RecD rec = recursion_d(p);

  // Fixed segments between Bob's move slots: Alice's rotations and her
  // message checks. seg[k] acts after slot k, with slot indices 1..m.
  const long m = n / 2;
  std::vector<CMat> seg(m + 1, CMat::Identity(kDim, kDim));
  const CMat keep = message_keep_projector();
  long slot = 0;
  for (long i = 1; i <= n; ++i) {
    if (i % 2 == 1) {
      seg[slot] = embedded_rotation(2 * 2 + 0, 0 * 2 + 1, p[i - 1]) * seg[slot];
    } else {
      ++slot;
      const double et = p[i - 1] * rec.pu[i - 1] / rec.pb[i];
      seg[slot] = keep * embedded_rotation(2 * 2 + 1, 1 * 2 + 0, et) * seg[slot];
    }
  }

  CVec start = CVec::Zero(kDim);
  start(seesaw_flat(2, 0, 0)) = 1.0;
  CMat objective = CMat::Zero(kDim, kDim);
  for (int mm = 0; mm < 2; ++mm)
    for (int b = 0; b < kDimB; ++b)
      objective(seesaw_flat(1, mm, b), seesaw_flat(1, mm, b)) = 1.0;

  auto evaluate = [&](const std::vector<CMat>& us) -> double {
    CVec phi = seg[0] * start;
    for (long k = 1; k <= m; ++k) phi = seg[k] * (embed_slot(us[k - 1]) * phi);
    const std::complex<double> v = (phi.adjoint() * (objective * phi))(0, 0);
    return v.real();
  };

  DDBSeesaw out;
  if (m == 0) {
    out.value = evaluate({});
    out.converged = true;
    return out;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<CMat> us;
  us.reserve(static_cast<std::size_t>(m));
  for (long k = 0; k < m; ++k) {
    CMat gauss(kDimMB, kDimMB);
    for (int r = 0; r < kDimMB; ++r)
      for (int c = 0; c < kDimMB; ++c) gauss(r, c) = std::complex<double>(nd(rng), nd(rng));
    Eigen::HouseholderQR<CMat> qr(gauss);
    us.push_back(qr.householderQ() * CMat::Identity(kDimMB, kDimMB));
  }

  double best = evaluate(us);
  double prev = best;
  int stall = 0;
  for (long sweep = 1; sweep <= iters; ++sweep) {
    // States just before each slot depend only on earlier slots, which this
    // sweep has not touched yet when updating back to front.
    std::vector<CVec> phis(static_cast<std::size_t>(m));
    CVec phi = seg[0] * start;
    for (long k = 1; k <= m; ++k) {
      phis[k - 1] = phi;
      if (k < m) phi = seg[k] * (embed_slot(us[k - 1]) * phi);
    }
    CMat suffix = seg[m].adjoint() * objective * seg[m];
    for (long k = m; k >= 1; --k) {
      const CVec x = embed_slot(us[k - 1]) * phis[k - 1];
      const CVec kx = suffix * x;
      CMat grad = CMat::Zero(kDimMB, kDimMB);
      for (int a = 0; a < 3; ++a)
        grad += kx.segment(a * kDimMB, kDimMB) * phis[k - 1].segment(a * kDimMB, kDimMB).adjoint();
      Eigen::JacobiSVD<CMat> svd(grad, Eigen::ComputeFullU | Eigen::ComputeFullV);
      us[k - 1] = svd.matrixU() * svd.matrixV().adjoint();
      if (k > 1) {
        const CMat w = embed_slot(us[k - 1]);
        suffix = seg[k - 1].adjoint() * (w.adjoint() * suffix * w) * seg[k - 1];
      }
    }
    const double val = evaluate(us);
    if (val > best) best = val;
    out.iters = sweep;
    if (std::abs(val - prev) <= 1e-13 * std::max(1.0, std::abs(val))) {
      if (++stall >= 3) {
        out.converged = true;
        break;
      }
    } else {
      stall = 0;
    }
    prev = val;
  }
  out.value = best;
  return out;
}

DDBSeesaw ddb_primal_seesaw_pb(const DDBGame& g, long iters, unsigned long seed) {
  validate_p(g.p);
  std::vector<double> pd;
  pd.reserve(g.p.size());
  for (const Q& x : g.p) pd.push_back(x.get_d());
  return ddb_primal_seesaw_pb(pd, iters, seed);
}

}  // namespace wcf
