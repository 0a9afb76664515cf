#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "compiler_internal.hpp"
#include "wcf/compiler.hpp"
#include "wcf/games.hpp"
#include "wcf/polynomial.hpp"

namespace wcf {

namespace detail {

double lanczos_min_eig(const std::function<Vec(const Vec&)>& matvec, int dim,
                       int max_iters, unsigned long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
  v.normalize();
  std::vector<Vec> basis;
  std::vector<double> alpha, beta;
  const int m = std::min(max_iters, dim);
  for (int j = 0; j < m; ++j) {
    basis.push_back(v);
    Vec w = matvec(v);
    const double a = v.dot(w);
    alpha.push_back(a);
    w -= a * v;
    if (j > 0) w -= beta.back() * basis[static_cast<size_t>(j - 1)];
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& u : basis) w -= u.dot(w) * u;
    const double b = w.norm();
    if (b < 1e-12) break;
    beta.push_back(b);
    v = w / b;
  }
  const int k = static_cast<int>(alpha.size());
  Mat t = Mat::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = alpha[static_cast<size_t>(i)];
    if (i + 1 < k) {
      t(i, i + 1) = beta[static_cast<size_t>(i)];
      t(i + 1, i) = beta[static_cast<size_t>(i)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(t, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

MinEigCheck sparse_min_eig_check(const SpMat& d, double tol) {
  MinEigCheck r;
  const long n = d.rows();
  SpMat dt = SpMat(d.transpose());
  SpMat sym = 0.5 * (d + dt);
  SpMat ident(n, n);
  ident.setIdentity();
  SpMat shifted = sym + tol * ident;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(shifted);
  const bool cert = ldlt.info() == Eigen::Success &&
                    ldlt.vectorD().minCoeff() >= -1e-12 * (1.0 + tol);
  auto mv = [&](const Vec& v) -> Vec { return sym * v; };
  double est = lanczos_min_eig(mv, static_cast<int>(n), 200, 20260823ul);
  if (!cert)
    est = std::min(est, lanczos_min_eig(mv, static_cast<int>(n), 200, 20260824ul));
  r.slack = est;
  r.ok = cert;
  r.certified_only = cert;
  return r;
}

DualSlack dual_constraint_slack(const StepUnitary& st, const Mat& lhs,
                                const Mat& mid, const std::vector<char>* e,
                                bool odd, int d_a, int d_m, int d_b,
                                long dense_cap, double tol) {
  DualSlack out;
  const long acting =
      odd ? static_cast<long>(d_a) * d_m : static_cast<long>(d_m) * d_b;
  const double scale =
      1.0 + std::max(lhs.cwiseAbs().maxCoeff(), mid.cwiseAbs().maxCoeff());
  const double dtol = 1e-12 * scale;
  const bool diag_ok = max_offdiag(lhs) <= dtol && max_offdiag(mid) <= dtol;
  auto lhs_at = [&](long t) {
    return odd ? lhs(t / d_m, t / d_m) : lhs(t % d_b, t % d_b);
  };
  auto mid_at = [&](long t) {
    double v = odd ? mid(t / d_m, t / d_m) : mid(t % d_b, t % d_b);
    if (e && !(*e)[static_cast<size_t>(t)]) v = 0;
    return v;
  };

  if (!st.sparse && diag_ok) {
    std::vector<char> covered(static_cast<size_t>(acting), 0);
    bool disjoint = true;
    for (const auto& blk : st.blocks)
      for (int t : blk.idx) {
        if (covered[static_cast<size_t>(t)]) disjoint = false;
        covered[static_cast<size_t>(t)] = 1;
      }
    if (disjoint) {
      double slack = std::numeric_limits<double>::infinity();
      for (const auto& blk : st.blocks) {
        const int m = static_cast<int>(blk.idx.size());
        Vec l(m), c(m);
        for (int r = 0; r < m; ++r) {
          l(r) = lhs_at(blk.idx[static_cast<size_t>(r)]);
          c(r) = mid_at(blk.idx[static_cast<size_t>(r)]);
        }
        Mat d = l.asDiagonal();
        d -= blk.w.transpose() * c.asDiagonal() * blk.w;
        slack = std::min(slack, dense_min_eig(d));
      }
      for (long t = 0; t < acting; ++t)
        if (!covered[static_cast<size_t>(t)])
          slack = std::min(slack, lhs_at(t) - mid_at(t));
      out.slack = slack;
      out.ok = slack >= -tol;
      return out;
    }
  }

  if (acting <= dense_cap) {
    Mat uu = st.dense();
    Mat big_l, big_m;
    if (odd) {
      big_l = kron_dense(lhs, Mat::Identity(d_m, d_m));
      big_m = kron_dense(mid, Mat::Identity(d_m, d_m));
    } else {
      big_l = kron_dense(Mat::Identity(d_m, d_m), lhs);
      big_m = kron_dense(Mat::Identity(d_m, d_m), mid);
    }
    if (e)
      for (long t = 0; t < acting; ++t)
        if (!(*e)[static_cast<size_t>(t)]) {
          big_m.row(t).setZero();
          big_m.col(t).setZero();
        }
    Mat d = big_l - uu.transpose() * big_m * uu;
    out.slack = dense_min_eig(d);
    out.ok = out.slack >= -tol;
    return out;
  }

  if (!diag_ok) {
    out.ok = false;
    out.slack = -std::numeric_limits<double>::infinity();
    out.diag =
        "non-diagonal certificates at a size beyond the dense cap are "
        "unsupported";
    return out;
  }
  SpMat uu = st.to_sparse();
  std::vector<Eigen::Triplet<double>> lt, mt;
  for (long t = 0; t < acting; ++t) {
    lt.emplace_back(t, t, lhs_at(t));
    const double v = mid_at(t);
    if (v != 0) mt.emplace_back(t, t, v);
  }
  SpMat lsp(acting, acting), msp(acting, acting);
  lsp.setFromTriplets(lt.begin(), lt.end());
  msp.setFromTriplets(mt.begin(), mt.end());
  SpMat d = lsp - SpMat(uu.transpose() * (msp * uu).eval());
  auto chk = sparse_min_eig_check(d, tol);
  out.slack = chk.slack;
  out.ok = chk.ok;
  out.certified_only = chk.certified_only;
  if (!chk.ok)
    out.diag = "factorization certificate failed; slack is an iterative estimate";
  return out;
}

}  // namespace detail

namespace {

using detail::dense_min_eig;
using detail::kron_dense;
using detail::max_offdiag;

bool is_num_diag(const Mat& m, double tol) { return max_offdiag(m) <= tol; }

struct StructuredShape {
  int na = 0, nb = 0;
};

// Recognizes the matched-register layout: d_a = 2 na, d_b = 2 nb,
// d_m = na * nb, with the two diagonal checks keeping exactly the states
// whose value registers agree with the message copy.
std::optional<StructuredShape> structured_shape(const Protocol& p) {
  if (p.d_a % 2 != 0 || p.d_b % 2 != 0) return std::nullopt;
  StructuredShape s;
  s.na = p.d_a / 2;
  s.nb = p.d_b / 2;
  if (static_cast<long>(s.na) * s.nb != p.d_m) return std::nullopt;
  if (!p.e_a || !p.e_b) return std::nullopt;
  for (int f = 0; f < 2; ++f)
    for (int ka = 0; ka < s.na; ++ka)
      for (int ka2 = 0; ka2 < s.na; ++ka2)
        for (int kb = 0; kb < s.nb; ++kb) {
          const long a = static_cast<long>(f) * s.na + ka;
          const long mm = static_cast<long>(ka2) * s.nb + kb;
          const char want = (f == 0 && ka == ka2) ? 1 : 0;
          if ((*p.e_a)[static_cast<size_t>(a * p.d_m + mm)] != want)
            return std::nullopt;
        }
  for (int ka = 0; ka < s.na; ++ka)
    for (int kb = 0; kb < s.nb; ++kb)
      for (int kb2 = 0; kb2 < s.nb; ++kb2)
        for (int f = 0; f < 2; ++f) {
          const long mm = static_cast<long>(ka) * s.nb + kb;
          const long b = static_cast<long>(kb2) * 2 + f;
          const char want = (f == 0 && kb2 == kb) ? 1 : 0;
          if ((*p.e_b)[static_cast<size_t>(mm * p.d_b + b)] != want)
            return std::nullopt;
        }
  return s;
}

// Honest amplitudes on the matched-register subspace, one matrix per round,
// amp(ka, kb); entry 0 holds the initial state. Throws when a step block
// leaves the subspace pattern.
struct CompressedRun {
  std::vector<Mat> amps;
  std::vector<double> proj_fail;
};

CompressedRun compressed_honest_run(const Protocol& p, int na, int nb) {
  CompressedRun run;
  int ka0 = -1, kb0 = -1;
  for (int a = 0; a < p.d_a; ++a)
    if (std::abs(p.psi_a0(a)) > 1e-12) {
      if (ka0 >= 0 || a >= na)
        throw std::runtime_error("compressed run: initial state not a matched basis vector");
      ka0 = a;
    }
  for (int b = 0; b < p.d_b; ++b)
    if (std::abs(p.psi_b0(b)) > 1e-12) {
      if (kb0 >= 0 || b % 2 != 0)
        throw std::runtime_error("compressed run: initial state not a matched basis vector");
      kb0 = b / 2;
    }
  if (ka0 < 0 || kb0 < 0)
    throw std::runtime_error("compressed run: empty initial state");
  {
    const long mm = static_cast<long>(ka0) * nb + kb0;
    if (std::abs(p.psi_m0(mm) - 1.0) > 1e-12)
      throw std::runtime_error("compressed run: message register does not mirror the end point");
  }
  Mat amp = Mat::Zero(na, nb);
  amp(ka0, kb0) = 1.0;
  run.amps.push_back(amp);
  for (int i = 1; i <= p.n; ++i) {
    const bool odd = (i % 2 == 1);
    const StepUnitary& st = p.steps[static_cast<size_t>(i - 1)];
    if (st.sparse)
      throw std::runtime_error("compressed run: sparse step is not in block form");
    double leak = 0;
    for (const auto& blk : st.blocks) {
      const int m = static_cast<int>(blk.idx.size());
      int line = -1;
      std::vector<std::pair<int, int>> fk(static_cast<size_t>(m));
      for (int r = 0; r < m; ++r) {
        const long t = blk.idx[static_cast<size_t>(r)];
        int f, k, k2, ln;
        if (odd) {
          const long a = t / p.d_m, mm = t % p.d_m;
          f = static_cast<int>(a) / na;
          k = static_cast<int>(a) % na;
          k2 = static_cast<int>(mm) / nb;
          ln = static_cast<int>(mm) % nb;
        } else {
          const long mm = t / p.d_b, b = t % p.d_b;
          ln = static_cast<int>(mm) / nb;
          k2 = static_cast<int>(mm) % nb;
          f = static_cast<int>(b) % 2;
          k = static_cast<int>(b) / 2;
        }
        if (k2 != k)
          throw std::runtime_error("compressed run: block leaves the matched subspace");
        if (line < 0) line = ln;
        if (line != ln)
          throw std::runtime_error("compressed run: block mixes lines");
        fk[static_cast<size_t>(r)] = {f, k};
      }
      Vec v(m);
      for (int r = 0; r < m; ++r) {
        const auto [f, k] = fk[static_cast<size_t>(r)];
        v(r) = (f == 0) ? (odd ? amp(k, line) : amp(line, k)) : 0.0;
      }
      Vec r2 = blk.w * v;
      for (int r = 0; r < m; ++r) {
        const auto [f, k] = fk[static_cast<size_t>(r)];
        if (f == 0) {
          if (odd)
            amp(k, line) = r2(r);
          else
            amp(line, k) = r2(r);
        } else {
          leak += r2(r) * r2(r);
        }
      }
    }
    run.proj_fail.push_back(leak);
    run.amps.push_back(amp);
  }
  return run;
}

// Index of the single unit diagonal entry of a rank-one basis projector.
int basis_projector_index(const Mat& pi) {
  int best = -1;
  for (long i = 0; i < pi.rows(); ++i)
    if (pi(i, i) > 0.5) {
      if (best >= 0) return -1;
      best = static_cast<int>(i);
    }
  if (best < 0) return -1;
  Mat outer = Mat::Zero(pi.rows(), pi.cols());
  outer(best, best) = 1.0;
  if ((pi - outer).cwiseAbs().maxCoeff() > 1e-12) return -1;
  return best;
}

struct DualSpec {
  std::string name;
  const StepUnitary* st = nullptr;
  const Mat* lhs = nullptr;
  const Mat* mid = nullptr;
  const std::vector<char>* e = nullptr;
  bool odd = true;
};

ConstraintSlack check_dual(const DualSpec& spec, int d_a, int d_m, int d_b,
                           const VerifyOptions& opt, std::string& diag) {
  ConstraintSlack item;
  item.name = spec.name;
  const double scale = 1.0 + std::max(spec.lhs->cwiseAbs().maxCoeff(),
                                      spec.mid->cwiseAbs().maxCoeff());
  item.tol = opt.ineq_tol_scale * scale;
  auto r = detail::dual_constraint_slack(*spec.st, *spec.lhs, *spec.mid,
                                         spec.e, spec.odd, d_a, d_m, d_b,
                                         opt.dense_cap, item.tol);
  item.slack = r.slack;
  item.ok = r.ok;
  item.certified_only = r.certified_only;
  diag = r.diag;
  return item;
}

}  // namespace

UBPReport verify_ubp(const UBP& u, const VerifyOptions& opt) {
  UBPReport rep;
  const Protocol& P = u.proto;
  const int n = P.n;

  auto fail = [&](const std::string& where, const std::string& what) {
    rep.failures.emplace_back(where, what);
  };
  auto push = [&](const std::string& name, double slack, double tol, bool ok,
                  bool cert_only = false, const std::string& extra = "") {
    rep.items.push_back({name, slack, tol, ok, cert_only});
    if (!ok) {
      std::ostringstream os;
      os << "slack " << slack << " below -" << tol;
      if (!extra.empty()) os << "; " << extra;
      fail(name, os.str());
    }
  };

  if (n < 2 || n % 2 != 0 || static_cast<int>(P.steps.size()) != n ||
      u.za.size() != static_cast<size_t>(n + 1) ||
      u.zb.size() != static_cast<size_t>(n + 1) || P.d_a <= 0 || P.d_m <= 0 ||
      P.d_b <= 0) {
    fail("shape", "round count, step list, or certificate chain malformed");
    return rep;
  }
  for (int i = 0; i <= n; ++i) {
    if (u.za[static_cast<size_t>(i)].rows() != P.d_a ||
        u.za[static_cast<size_t>(i)].cols() != P.d_a ||
        u.zb[static_cast<size_t>(i)].rows() != P.d_b ||
        u.zb[static_cast<size_t>(i)].cols() != P.d_b) {
      fail("shape", "certificate dimensions do not match the registers");
      return rep;
    }
  }
  for (int i = 1; i <= n; ++i) {
    const bool odd = (i % 2 == 1);
    const long acting = odd ? static_cast<long>(P.d_a) * P.d_m
                            : static_cast<long>(P.d_m) * P.d_b;
    if (P.steps[static_cast<size_t>(i - 1)].dim != acting) {
      fail("shape", "step dimension does not match the acting registers");
      return rep;
    }
  }

  for (int i = 1; i <= n; ++i) {
    std::ostringstream nm;
    nm << "unitarity round " << i;
    const double err = P.steps[static_cast<size_t>(i - 1)].unitarity_error();
    push(nm.str(), -err, opt.unitary_tol, err <= opt.unitary_tol);
  }

  {
    Eigen::SelfAdjointEigenSolver<Mat> ea(0.5 * (P.pi_a1 + P.pi_a1.transpose()),
                                          Eigen::EigenvaluesOnly);
    const double sa = std::min(ea.eigenvalues().minCoeff(),
                               1.0 - ea.eigenvalues().maxCoeff());
    push("povm alice", sa, opt.ineq_tol_scale, sa >= -opt.ineq_tol_scale);
    Eigen::SelfAdjointEigenSolver<Mat> eb(0.5 * (P.pi_b0 + P.pi_b0.transpose()),
                                          Eigen::EigenvaluesOnly);
    const double sb = std::min(eb.eigenvalues().minCoeff(),
                               1.0 - eb.eigenvalues().maxCoeff());
    push("povm bob", sb, opt.ineq_tol_scale, sb >= -opt.ineq_tol_scale);
  }

  {
    const double da = std::abs(P.psi_a0.norm() - 1.0);
    const double dm = std::abs(P.psi_m0.norm() - 1.0);
    const double db = std::abs(P.psi_b0.norm() - 1.0);
    const double dev = std::max({da, dm, db});
    push("initial state norms", -dev, opt.eigvec_tol, dev <= opt.eigvec_tol);
  }

  {
    const double ra = (u.za[0] * P.psi_a0 - u.beta * P.psi_a0).norm();
    push("start eigenvector alice", -ra, opt.eigvec_tol, ra <= opt.eigvec_tol);
    const double rb = (u.zb[0] * P.psi_b0 - u.alpha * P.psi_b0).norm();
    push("start eigenvector bob", -rb, opt.eigvec_tol, rb <= opt.eigvec_tol);
  }

  {
    const double ta = (u.za[static_cast<size_t>(n)] - P.pi_a1).cwiseAbs().maxCoeff();
    push("terminal alice", -ta, opt.eigvec_tol, ta <= opt.eigvec_tol);
    const double tb = (u.zb[static_cast<size_t>(n)] - P.pi_b0).cwiseAbs().maxCoeff();
    push("terminal bob", -tb, opt.eigvec_tol, tb <= opt.eigvec_tol);
  }

  for (int i = 1; i <= n; ++i) {
    if (i % 2 == 0) {
      std::ostringstream nm;
      nm << "z equality alice round " << i;
      const double d = (u.za[static_cast<size_t>(i - 1)] - u.za[static_cast<size_t>(i)])
                           .cwiseAbs()
                           .maxCoeff();
      push(nm.str(), -d, opt.eigvec_tol, d <= opt.eigvec_tol);
    } else {
      std::ostringstream nm;
      nm << "z equality bob round " << i;
      const double d = (u.zb[static_cast<size_t>(i - 1)] - u.zb[static_cast<size_t>(i)])
                           .cwiseAbs()
                           .maxCoeff();
      push(nm.str(), -d, opt.eigvec_tol, d <= opt.eigvec_tol);
    }
  }

  for (int i = 0; i <= n; ++i) {
    if (i > 0 && (u.za[static_cast<size_t>(i)] - u.za[static_cast<size_t>(i - 1)])
                         .cwiseAbs()
                         .maxCoeff() == 0.0) {
    } else {
      std::ostringstream nm;
      nm << "z psd alice index " << i;
      const double scale = 1.0 + u.za[static_cast<size_t>(i)].cwiseAbs().maxCoeff();
      const double s = dense_min_eig(u.za[static_cast<size_t>(i)]);
      push(nm.str(), s, opt.ineq_tol_scale * scale, s >= -opt.ineq_tol_scale * scale);
    }
    if (i > 0 && (u.zb[static_cast<size_t>(i)] - u.zb[static_cast<size_t>(i - 1)])
                         .cwiseAbs()
                         .maxCoeff() == 0.0) {
    } else {
      std::ostringstream nm;
      nm << "z psd bob index " << i;
      const double scale = 1.0 + u.zb[static_cast<size_t>(i)].cwiseAbs().maxCoeff();
      const double s = dense_min_eig(u.zb[static_cast<size_t>(i)]);
      push(nm.str(), s, opt.ineq_tol_scale * scale, s >= -opt.ineq_tol_scale * scale);
    }
  }

  for (int i = 1; i <= n; ++i) {
    DualSpec spec;
    spec.st = &P.steps[static_cast<size_t>(i - 1)];
    spec.odd = (i % 2 == 1);
    std::ostringstream nm;
    if (spec.odd) {
      nm << "dual alice round " << i;
      spec.lhs = &u.za[static_cast<size_t>(i - 1)];
      spec.mid = &u.za[static_cast<size_t>(i)];
      spec.e = P.e_a ? &*P.e_a : nullptr;
    } else {
      nm << "dual bob round " << i;
      spec.lhs = &u.zb[static_cast<size_t>(i - 1)];
      spec.mid = &u.zb[static_cast<size_t>(i)];
      spec.e = P.e_b ? &*P.e_b : nullptr;
    }
    spec.name = nm.str();
    std::string diag;
    ConstraintSlack item = check_dual(spec, P.d_a, P.d_m, P.d_b, opt, diag);
    rep.items.push_back(item);
    if (!item.ok) {
      std::ostringstream os;
      os << "slack " << item.slack << " below -" << item.tol;
      if (!diag.empty()) os << "; " << diag;
      fail(item.name, os.str());
    }
  }

  {
    bool ran = false;
    double agree = 0, total_dev = 0, pfail = 0;
    if (P.full_dim() <= 4000000) {
      try {
        HonestRun hr = honest_run(P);
        agree = hr.agree_residual;
        total_dev = std::abs(hr.pa + hr.pb - 1.0);
        for (double f : hr.proj_fail) pfail = std::max(pfail, f);
        ran = true;
      } catch (const std::exception& e) {
        fail("honest run", e.what());
      }
    } else if (auto shape = structured_shape(P)) {
      try {
        CompressedRun run = compressed_honest_run(P, shape->na, shape->nb);
        const int ka1 = basis_projector_index(P.pi_a1);
        const int b1 = basis_projector_index(P.pi_b0);
        if (ka1 < 0 || ka1 >= shape->na || b1 < 0 || b1 % 2 != 0)
          throw std::runtime_error("outcome projectors are not matched basis vectors");
        const int kb1 = b1 / 2;
        const Mat& amp = run.amps.back();
        double pa = 0, pb = 0, cross = 0;
        for (int ka = 0; ka < shape->na; ++ka)
          for (int kb = 0; kb < shape->nb; ++kb) {
            const double w = amp(ka, kb) * amp(ka, kb);
            if (ka == ka1 && kb != kb1) pb += w;
            if (ka != ka1 && kb == kb1) pa += w;
            if (ka != ka1 && kb != kb1) cross += w;
          }
        agree = std::max(std::abs(amp(ka1, kb1)), std::sqrt(cross));
        total_dev = std::abs(pa + pb - 1.0);
        for (double f : run.proj_fail) pfail = std::max(pfail, f);
        ran = true;
      } catch (const std::exception& e) {
        fail("honest run", e.what());
      }
    } else {
      fail("honest run", "state too large and the protocol is not in matched form");
    }
    if (ran) {
      push("honest agreement", -agree, opt.agree_tol, agree <= opt.agree_tol);
      push("honest outcome total", -total_dev, opt.agree_tol,
           total_dev <= opt.agree_tol);
      push("honest check mass", -pfail, 1e-9, pfail <= 1e-9);
    }
  }

  rep.accepted = rep.failures.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// ubp_to_tdpg

PointFn2D joint_prob_rationalized(const Mat& za, const Mat& zb, const Vec& psi,
                                  int d_a, int d_m, int d_b, double cluster_tol,
                                  unsigned long den_bound) {
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::SelfAdjointEigenSolver<Mat> ea(0.5 * (za + za.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> eb(0.5 * (zb + zb.transpose()));

  auto clusters = [&](const Vec& ev) {
    std::vector<std::pair<long, long>> cl;
    long i = 0;
    while (i < ev.size()) {
      long j = i + 1;
      while (j < ev.size() && ev(j) - ev(j - 1) <= cluster_tol) ++j;
      cl.emplace_back(i, j);
      i = j;
    }
    return cl;
  };
  const auto ca = clusters(ea.eigenvalues());
  const auto cb = clusters(eb.eigenvalues());

  Eigen::Map<const RowMat> m(psi.data(), d_a, static_cast<long>(d_m) * d_b);
  Mat ta = ea.eigenvectors().transpose() * m;  // rows in the alice eigenbasis

  PointFn2D out;
  for (const auto& [a0, a1] : ca) {
    // Weighted coordinate over the cluster.
    double wnum = 0, wtot_rows = 0;
    Mat per_b = Mat::Zero(static_cast<long>(a1 - a0) * d_m, d_b);
    for (long r = a0; r < a1; ++r) {
      Vec row = ta.row(r);
      Eigen::Map<const RowMat> slice(row.data(), d_m, d_b);
      per_b.block((r - a0) * d_m, 0, d_m, d_b) = slice * eb.eigenvectors();
      const double rw = row.squaredNorm();
      wnum += rw * ea.eigenvalues()(r);
      wtot_rows += rw;
    }
    const double xcoord =
        (wtot_rows > 0) ? wnum / wtot_rows
                        : ea.eigenvalues().segment(a0, a1 - a0).mean();
    for (const auto& [b0, b1] : cb) {
      double w = 0, ynum = 0;
      for (long c = b0; c < b1; ++c) {
        const double cw = per_b.col(c).squaredNorm();
        w += cw;
        ynum += cw * eb.eigenvalues()(c);
      }
      if (w < 1e-9) continue;
      const double ycoord = (w > 0) ? ynum / w : eb.eigenvalues()(b0);
      const Q x = rationalize(xcoord, den_bound);
      const Q y = rationalize(ycoord, den_bound);
      const Q wq = rationalize(w, den_bound);
      if (wq > 0 && x >= 0 && y >= 0) out.add(x, y, wq);
    }
  }
  return out;
}

namespace {

void tolerant_transition_check(const PointFn2D& from, const PointFn2D& to,
                               Axis axis, int t, const Q& slack,
                               std::vector<std::pair<std::string, std::string>>& failures) {
  auto lines_p = from.lines(axis);
  auto lines_q = to.lines(axis);
  std::set<Q> keys;
  for (const auto& kv : lines_p) keys.insert(kv.first);
  for (const auto& kv : lines_q) keys.insert(kv.first);
  for (const Q& key : keys) {
    PointFn1D lp, lq;
    if (auto it = lines_p.find(key); it != lines_p.end()) lp = it->second;
    if (auto it = lines_q.find(key); it != lines_q.end()) lq = it->second;
    if (lp == lq) continue;
    std::ostringstream loc;
    loc << "transition " << t << ", line "
        << (axis == Axis::horizontal ? "y=" : "x=") << q_str(key);
    const Q tp = lp.total(), tq = lq.total();
    const Q scale = tp + tq;
    if (q_abs(tq - tp) > slack * scale) {
      failures.emplace_back(loc.str(), "line mass not conserved within the band");
      continue;
    }
    if (tq == 0) {
      failures.emplace_back(loc.str(), "line mass vanished");
      continue;
    }
    PointFn1D lq2 = scale_fn(lq, tp / tq);
    PointFn1D d = sub_fn(lq2, lp);
    if (d.w.empty()) continue;
    std::vector<std::pair<Q, Q>> pts(d.w.begin(), d.w.end());
    bool bad_coord = false;
    for (const auto& zw : pts)
      if (q_sign(zw.first) < 0) bad_coord = true;
    if (bad_coord) {
      failures.emplace_back(loc.str(), "negative coordinate in the extracted line");
      continue;
    }
    Poly num = clear_denominators(pts);
    Poly prod = Poly::constant(Q(1));
    for (const auto& zw : pts) prod = prod * Poly({zw.first, Q(1)});
    Poly g = num + prod * (slack * scale);
    SignVerdict sv = sign_on_open_positive_axis(g);
    if (!sv.nonnegative) {
      std::string extra = sv.witness ? (" near lambda = " + q_str(*sv.witness)) : "";
      failures.emplace_back(loc.str(),
                            "slackened line function goes negative" + extra);
    }
  }
}

}  // namespace

UbpToTdpgResult ubp_to_tdpg(const UBP& u, const UbpToTdpgOptions& opt) {
  UbpToTdpgResult res;
  if (opt.run_verify) {
    UBPReport vr = verify_ubp(u, opt.verify);
    if (!vr.accepted) {
      res.failures = vr.failures;
      res.failures.emplace_back("precondition", "certificate verification rejected the input");
      return res;
    }
  }
  const Protocol& P = u.proto;
  const int n = P.n;
  std::vector<PointFn2D> frames(static_cast<size_t>(n + 1));

  auto note_gaps = [&](const Mat& z, const std::string& who, int frame) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (z + z.transpose()),
                                          Eigen::EigenvaluesOnly);
    const Vec& ev = es.eigenvalues();
    for (long i = 1; i < ev.size(); ++i) {
      const double g = ev(i) - ev(i - 1);
      if (g > opt.cluster_tol && g < 10 * opt.cluster_tol) {
        std::ostringstream os;
        os << "frame " << frame << ", " << who << ": eigenvalue gap " << g
           << " is close to the cluster tolerance";
        res.cluster_notes.push_back(os.str());
      }
    }
  };

  bool built = false;
  if (P.full_dim() <= 2000000) {
    try {
      HonestRun hr = honest_run(P);
      for (int j = 0; j <= n; ++j) {
        const Mat& za = u.za[static_cast<size_t>(n - j)];
        const Mat& zb = u.zb[static_cast<size_t>(n - j)];
        if (j == 0 || (za - u.za[static_cast<size_t>(n - j + 1)]).cwiseAbs().maxCoeff() != 0)
          note_gaps(za, "alice certificate", j);
        if (j == 0 || (zb - u.zb[static_cast<size_t>(n - j + 1)]).cwiseAbs().maxCoeff() != 0)
          note_gaps(zb, "bob certificate", j);
        frames[static_cast<size_t>(j)] = joint_prob_rationalized(
            za, zb, hr.psi[static_cast<size_t>(n - j)], P.d_a, P.d_m, P.d_b,
            opt.cluster_tol, opt.den_bound);
      }
      built = true;
    } catch (const std::exception& e) {
      res.failures.emplace_back("honest run", e.what());
    }
  } else if (auto shape = structured_shape(P)) {
    try {
      CompressedRun run = compressed_honest_run(P, shape->na, shape->nb);
      for (int j = 0; j <= n; ++j) {
        const Mat& za = u.za[static_cast<size_t>(n - j)];
        const Mat& zb = u.zb[static_cast<size_t>(n - j)];
        const Mat& amp = run.amps[static_cast<size_t>(n - j)];
        PointFn2D fn;
        for (int ka = 0; ka < shape->na; ++ka)
          for (int kb = 0; kb < shape->nb; ++kb) {
            const double w = amp(ka, kb) * amp(ka, kb);
            if (w < 1e-9) continue;
            const Q x = rationalize(za(ka, ka), opt.den_bound);
            const Q y = rationalize(zb(2 * kb, 2 * kb), opt.den_bound);
            const Q wq = rationalize(w, opt.den_bound);
            if (wq > 0) fn.add(x, y, wq);
          }
        frames[static_cast<size_t>(j)] = fn;
      }
      built = true;
    } catch (const std::exception& e) {
      res.failures.emplace_back("honest run", e.what());
    }
  } else {
    res.failures.emplace_back("honest run",
                              "state too large and the protocol is not in matched form");
  }
  if (!built) return res;

  const Q slack = Q(opt.slack);

  // Boundary frames.
  Q pa = 0, pb = 0;
  for (const auto& pw : frames[0].w) {
    if (pw.first == std::make_pair(Q(1), Q(0)))
      pb = pw.second;
    else if (pw.first == std::make_pair(Q(0), Q(1)))
      pa = pw.second;
    else if (pw.second > slack)
      res.failures.emplace_back(
          "frame 0", "stray weight " + q_str(pw.second) + " at (" +
                         q_str(pw.first.first) + ", " + q_str(pw.first.second) + ")");
  }
  if (q_abs(pa + pb - 1) > slack)
    res.failures.emplace_back("frame 0", "outcome weights sum to " + q_str(pa + pb));
  {
    const PointFn2D& last = frames[static_cast<size_t>(n)];
    Q wmax = 0, tot = 0;
    for (const auto& pw : last.w) {
      tot += pw.second;
      if (pw.second > wmax) wmax = pw.second;
    }
    if (tot - wmax > slack || q_abs(tot - 1) > slack)
      res.failures.emplace_back("end frame", "not concentrated on a single point");
  }

  for (int t = 1; t <= n; ++t) {
    const Axis axis = (t % 2 == 1) ? Axis::vertical : Axis::horizontal;
    tolerant_transition_check(frames[static_cast<size_t>(t - 1)],
                              frames[static_cast<size_t>(t)], axis, t, slack,
                              res.failures);
  }

  TDPG game;
  game.pa = pa;
  game.pb = pb;
  for (auto& fn : frames) game.frames.emplace_back(Config2D(fn));
  res.game = std::move(game);
  res.accepted = res.failures.empty();
  return res;
}

}  // namespace wcf
