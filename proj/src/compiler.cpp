#include "wcf/compiler.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "compiler_internal.hpp"
#include "wcf/games.hpp"

namespace wcf {

namespace detail {

Mat kron_dense(const Mat& a, const Mat& b) {
  Mat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

Vec kron_vec(const Vec& a, const Vec& b) {
  Vec r(a.size() * b.size());
  for (long i = 0; i < a.size(); ++i) r.segment(i * b.size(), b.size()) = a(i) * b;
  return r;
}

double max_offdiag(const Mat& m) {
  double r = 0;
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j)
      if (i != j) r = std::max(r, std::abs(m(i, j)));
  return r;
}

double dense_min_eig(const Mat& m) {
  if (m.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

int coord_index(const std::vector<Q>& s, const Q& v) {
  auto it = std::lower_bound(s.begin(), s.end(), v);
  if (it == s.end() || *it != v) return -1;
  return static_cast<int>(it - s.begin());
}

Vec apply_step_full(const StepUnitary& u, bool odd, const Vec& psi, int d_a,
                    int d_m, int d_b) {
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Vec out(psi.size());
  if (odd) {
    Eigen::Map<const RowMat> m(psi.data(), static_cast<long>(d_a) * d_m, d_b);
    Eigen::Map<RowMat> r(out.data(), static_cast<long>(d_a) * d_m, d_b);
    if (u.sparse) {
      r = *u.sparse * m;
    } else {
      r = m;
      for (const auto& blk : u.blocks) {
        const long k = static_cast<long>(blk.idx.size());
        Mat gather(k, d_b);
        for (long t = 0; t < k; ++t) gather.row(t) = m.row(blk.idx[t]);
        Mat res = blk.w * gather;
        for (long t = 0; t < k; ++t) r.row(blk.idx[t]) = res.row(t);
      }
    }
  } else {
    Eigen::Map<const RowMat> m(psi.data(), d_a, static_cast<long>(d_m) * d_b);
    Eigen::Map<RowMat> r(out.data(), d_a, static_cast<long>(d_m) * d_b);
    if (u.sparse) {
      r = (*u.sparse * m.transpose()).transpose();
    } else {
      r = m;
      for (const auto& blk : u.blocks) {
        const long k = static_cast<long>(blk.idx.size());
        Mat gather(d_a, k);
        for (long t = 0; t < k; ++t) gather.col(t) = m.col(blk.idx[t]);
        Mat res = gather * blk.w.transpose();
        for (long t = 0; t < k; ++t) r.col(blk.idx[t]) = res.col(t);
      }
    }
  }
  return out;
}

Vec apply_step_full_adjoint(const StepUnitary& u, bool odd, const Vec& psi,
                            int d_a, int d_m, int d_b) {
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Vec out(psi.size());
  if (odd) {
    Eigen::Map<const RowMat> m(psi.data(), static_cast<long>(d_a) * d_m, d_b);
    Eigen::Map<RowMat> r(out.data(), static_cast<long>(d_a) * d_m, d_b);
    if (u.sparse) {
      r = u.sparse->transpose() * m;
    } else {
      r = m;
      for (const auto& blk : u.blocks) {
        const long k = static_cast<long>(blk.idx.size());
        Mat gather(k, d_b);
        for (long t = 0; t < k; ++t) gather.row(t) = m.row(blk.idx[t]);
        Mat res = blk.w.transpose() * gather;
        for (long t = 0; t < k; ++t) r.row(blk.idx[t]) = res.row(t);
      }
    }
  } else {
    Eigen::Map<const RowMat> m(psi.data(), d_a, static_cast<long>(d_m) * d_b);
    Eigen::Map<RowMat> r(out.data(), d_a, static_cast<long>(d_m) * d_b);
    if (u.sparse) {
      r = (u.sparse->transpose() * m.transpose()).transpose();
    } else {
      r = m;
      for (const auto& blk : u.blocks) {
        const long k = static_cast<long>(blk.idx.size());
        Mat gather(d_a, k);
        for (long t = 0; t < k; ++t) gather.col(t) = m.col(blk.idx[t]);
        Mat res = gather * blk.w;
        for (long t = 0; t < k; ++t) r.col(blk.idx[t]) = res.col(t);
      }
    }
  }
  return out;
}

double apply_diag_proj_full(const std::vector<char>& keep, bool odd, Vec& psi,
                            int d_a, int d_m, int d_b) {
  double removed = 0;
  if (odd) {
    const long am = static_cast<long>(d_a) * d_m;
    for (long i = 0; i < am; ++i) {
      if (keep[static_cast<size_t>(i)]) continue;
      for (long b = 0; b < d_b; ++b) {
        double& v = psi(i * d_b + b);
        removed += v * v;
        v = 0;
      }
    }
  } else {
    const long mb = static_cast<long>(d_m) * d_b;
    for (long a = 0; a < d_a; ++a)
      for (long i = 0; i < mb; ++i) {
        if (keep[static_cast<size_t>(i)]) continue;
        double& v = psi(a * mb + i);
        removed += v * v;
        v = 0;
      }
  }
  return removed;
}

}  // namespace detail

using detail::coord_index;
using detail::dense_min_eig;

// ---------------------------------------------------------------------------
// StepUnitary

Vec StepUnitary::apply(const Vec& x) const {
  if (sparse) return *sparse * x;
  Vec y = x;
  for (const auto& blk : blocks) {
    const long k = static_cast<long>(blk.idx.size());
    Vec v(k);
    for (long t = 0; t < k; ++t) v(t) = x(blk.idx[t]);
    Vec r = blk.w * v;
    for (long t = 0; t < k; ++t) y(blk.idx[t]) = r(t);
  }
  return y;
}

Vec StepUnitary::apply_adjoint(const Vec& x) const {
  if (sparse) return sparse->transpose() * x;
  Vec y = x;
  for (const auto& blk : blocks) {
    const long k = static_cast<long>(blk.idx.size());
    Vec v(k);
    for (long t = 0; t < k; ++t) v(t) = x(blk.idx[t]);
    Vec r = blk.w.transpose() * v;
    for (long t = 0; t < k; ++t) y(blk.idx[t]) = r(t);
  }
  return y;
}

Mat StepUnitary::dense() const {
  if (sparse) return Mat(*sparse);
  Mat m = Mat::Identity(dim, dim);
  for (const auto& blk : blocks) {
    const long k = static_cast<long>(blk.idx.size());
    for (long r = 0; r < k; ++r) {
      m.row(blk.idx[r]).setZero();
      m.col(blk.idx[r]).setZero();
    }
    for (long r = 0; r < k; ++r)
      for (long c = 0; c < k; ++c) m(blk.idx[r], blk.idx[c]) = blk.w(r, c);
  }
  return m;
}

SpMat StepUnitary::to_sparse() const {
  if (sparse) return *sparse;
  std::vector<char> covered(static_cast<size_t>(dim), 0);
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& blk : blocks) {
    const long k = static_cast<long>(blk.idx.size());
    for (long r = 0; r < k; ++r) {
      covered[static_cast<size_t>(blk.idx[r])] = 1;
      for (long c = 0; c < k; ++c)
        if (blk.w(r, c) != 0.0) trips.emplace_back(blk.idx[r], blk.idx[c], blk.w(r, c));
    }
  }
  for (long i = 0; i < dim; ++i)
    if (!covered[static_cast<size_t>(i)]) trips.emplace_back(i, i, 1.0);
  SpMat m(dim, dim);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

double StepUnitary::unitarity_error() const {
  if (sparse) {
    SpMat g = sparse->transpose() * *sparse;
    double err = 0;
    for (int k = 0; k < g.outerSize(); ++k)
      for (SpMat::InnerIterator it(g, k); it; ++it) {
        const double target = (it.row() == it.col()) ? 1.0 : 0.0;
        err = std::max(err, std::abs(it.value() - target));
      }
    // Zero diagonal entries never appear in the iteration; cover them.
    Vec diag = Vec::Zero(dim);
    for (int k = 0; k < g.outerSize(); ++k)
      for (SpMat::InnerIterator it(g, k); it; ++it)
        if (it.row() == it.col()) diag(it.row()) = it.value();
    for (long i = 0; i < dim; ++i) err = std::max(err, std::abs(diag(i) - 1.0));
    return err;
  }
  double err = 0;
  for (const auto& blk : blocks) {
    Mat g = blk.w.transpose() * blk.w;
    err = std::max(err, (g - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
  }
  return err;
}

// ---------------------------------------------------------------------------
// ApproxFn1D / prob_extract

double ApproxFn1D::total() const {
  double t = 0;
  for (const auto& pw : pts) t += pw.second;
  return t;
}

double ApproxFn1D::at(double z, double coord_tol) const {
  double t = 0;
  for (const auto& pw : pts)
    if (std::abs(pw.first - z) <= coord_tol) t += pw.second;
  return t;
}

ApproxFn1D prob_extract(const Mat& z, const Mat& state, double cluster_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (z + z.transpose()));
  const Vec& ev = es.eigenvalues();
  const Mat& vv = es.eigenvectors();
  ApproxFn1D out;
  const long d = ev.size();
  long i = 0;
  while (i < d) {
    long j = i + 1;
    while (j < d && ev(j) - ev(j - 1) <= cluster_tol) ++j;
    double w = 0, mean_num = 0, mean_den = 0;
    for (long k = i; k < j; ++k) {
      const double wk = (vv.col(k).transpose() * state * vv.col(k))(0, 0);
      w += wk;
      mean_num += std::max(wk, 0.0) * ev(k);
      mean_den += std::max(wk, 0.0);
    }
    const double coord = (mean_den > 0) ? mean_num / mean_den
                                        : ev.segment(i, j - i).mean();
    if (std::abs(w) > 1e-14) out.pts.emplace_back(coord, w);
    i = j;
  }
  return out;
}

ApproxFn1D prob_extract(const Mat& z, const Vec& state, double cluster_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (z + z.transpose()));
  const Vec& ev = es.eigenvalues();
  const Mat& vv = es.eigenvectors();
  ApproxFn1D out;
  const long d = ev.size();
  long i = 0;
  while (i < d) {
    long j = i + 1;
    while (j < d && ev(j) - ev(j - 1) <= cluster_tol) ++j;
    double w = 0, mean_num = 0;
    for (long k = i; k < j; ++k) {
      const double a = vv.col(k).dot(state);
      w += a * a;
      mean_num += a * a * ev(k);
    }
    const double coord = (w > 0) ? mean_num / w : ev.segment(i, j - i).mean();
    if (w > 1e-14) out.pts.emplace_back(coord, w);
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// realize_transition

namespace {

struct LevelPlan {
  std::vector<int> lv;  // level ids f * |S| + k, in block row order
  Mat w;                // the unitary over lv
};

double level_xval(int level, const std::vector<double>& sd) {
  const int ns = static_cast<int>(sd.size());
  return (level < ns) ? sd[static_cast<size_t>(level)] : 0.0;
}

double level_yval(int level, const std::vector<double>& sd, double lambda) {
  const int ns = static_cast<int>(sd.size());
  return (level < ns) ? sd[static_cast<size_t>(level)] : lambda;
}

// Shared certificate assembly and check for a candidate block.
RealizeOutcome finish_plan(const LevelPlan& plan, RealizeBranch branch,
                           const PointFn1D& p, const PointFn1D& q,
                           const std::vector<Q>& s, double lambda,
                           const RealizeOptions& opt) {
  RealizeOutcome out;
  out.branch = branch;
  out.lambda = lambda;
  const int ns = static_cast<int>(s.size());
  std::vector<double> sd(s.size());
  for (size_t i = 0; i < s.size(); ++i) sd[i] = q_double(s[i]);

  const int m = static_cast<int>(plan.lv.size());
  std::map<int, int> pos;
  for (int r = 0; r < m; ++r) pos[plan.lv[r]] = r;

  // State equation over the full level space.
  Vec want = Vec::Zero(2 * ns), have = Vec::Zero(2 * ns);
  for (const auto& zw : p.w) {
    const int k = coord_index(s, zw.first);
    if (k < 0) {
      out.message = "realize: coordinate missing from the axis list";
      return out;
    }
    want(k) = std::sqrt(q_double(zw.second));
  }
  for (const auto& zw : q.w) {
    const int k = coord_index(s, zw.first);
    if (k < 0) {
      out.message = "realize: coordinate missing from the axis list";
      return out;
    }
    have(k) = std::sqrt(q_double(zw.second));
  }
  Vec mapped = have;
  {
    Vec v(m);
    for (int r = 0; r < m; ++r) v(r) = have(plan.lv[r]);
    Vec r2 = plan.w * v;
    for (int r = 0; r < m; ++r) mapped(plan.lv[r]) = r2(r);
  }
  const double state_err = (mapped - want).cwiseAbs().maxCoeff();

  const double uerr =
      (m == 0) ? 0.0
               : (plan.w.transpose() * plan.w - Mat::Identity(m, m))
                     .cwiseAbs()
                     .maxCoeff();

  // Block part of diag(y) - U^T diag(x) U.
  double slack = 0;
  if (m > 0) {
    Vec xv(m), yv(m);
    for (int r = 0; r < m; ++r) {
      xv(r) = level_xval(plan.lv[r], sd);
      yv(r) = level_yval(plan.lv[r], sd, lambda);
    }
    Mat d = yv.asDiagonal();
    d -= plan.w.transpose() * xv.asDiagonal() * plan.w;
    slack = dense_min_eig(d);
  }

  // Certificate over the full level space.
  Mat x = Mat::Zero(2 * ns, 2 * ns), y = Mat::Zero(2 * ns, 2 * ns);
  for (int l = 0; l < 2 * ns; ++l) {
    x(l, l) = level_xval(l, sd);
    y(l, l) = level_yval(l, sd, lambda);
  }
  if (m > 0) {
    Vec xv(m);
    for (int r = 0; r < m; ++r) xv(r) = level_xval(plan.lv[r], sd);
    Mat xb = plan.w.transpose() * xv.asDiagonal() * plan.w;
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) x(plan.lv[r], plan.lv[c]) = xb(r, c);
  }
  out.cert.x = x;
  out.cert.y = y;
  out.cert.psi = have;
  out.cert.psd_slack = slack;

  double gap = lambda;
  for (int i = 1; i < ns; ++i) gap = std::min(gap, sd[static_cast<size_t>(i)] - sd[static_cast<size_t>(i - 1)]);
  const double ctol = std::max(1e-9, 0.25 * gap * 1e-3);
  ApproxFn1D fp = prob_extract(x, have, ctol);
  ApproxFn1D fq = prob_extract(y, have, ctol);
  double perr = 0;
  for (const auto& zw : p.w)
    perr = std::max(perr, std::abs(fp.at(q_double(zw.first), ctol) - q_double(zw.second)));
  for (const auto& zw : q.w)
    perr = std::max(perr, std::abs(fq.at(q_double(zw.first), ctol) - q_double(zw.second)));
  perr = std::max(perr, std::abs(fp.total() - q_double(p.total())));
  perr = std::max(perr, std::abs(fq.total() - q_double(q.total())));
  out.cert.prob_residual = perr;

  const double psd_tol = opt.psd_tol_scale * (1.0 + lambda);
  out.u.idx = plan.lv;
  out.u.w = plan.w;
  if (uerr > 1e-10) {
    std::ostringstream os;
    os << "realize: block is not orthogonal, error " << uerr;
    out.message = os.str();
    return out;
  }
  if (state_err > opt.state_tol) {
    std::ostringstream os;
    os << "realize: state equation residual " << state_err;
    out.message = os.str();
    return out;
  }
  if (slack < -psd_tol) {
    std::ostringstream os;
    os << "realize: certificate slack " << slack << " below -" << psd_tol;
    out.message = os.str();
    return out;
  }
  out.ok = true;
  out.message = "ok";
  return out;
}

struct Classified {
  std::vector<std::pair<Q, Q>> sources;  // (z, weight leaving), ascending z
  std::vector<std::pair<Q, Q>> targets;  // (z, weight arriving), ascending z
  bool full_transfer = true;
};

Classified classify_diff(const PointFn1D& p, const PointFn1D& q) {
  Classified c;
  PointFn1D d = sub_fn(q, p);
  for (const auto& zw : d.w) {
    if (q_sign(zw.second) < 0)
      c.sources.emplace_back(zw.first, -zw.second);
    else
      c.targets.emplace_back(zw.first, zw.second);
  }
  for (const auto& zw : c.sources)
    if (q.at(zw.first) != 0) c.full_transfer = false;
  for (const auto& zw : c.targets)
    if (p.at(zw.first) != 0) c.full_transfer = false;
  return c;
}

bool plan_relocation(const Classified& c, const std::vector<Q>& s, int ns,
                     LevelPlan& plan) {
  const size_t k = c.sources.size();
  if (k == 0 || c.targets.size() != k || !c.full_transfer) return false;
  for (size_t j = 0; j < k; ++j) {
    if (c.sources[j].second != c.targets[j].second) return false;
    if (!(c.sources[j].first < c.targets[j].first)) return false;
  }
  plan.lv.clear();
  plan.w = Mat::Zero(3 * static_cast<long>(k), 3 * static_cast<long>(k));
  for (size_t j = 0; j < k; ++j) {
    const int ka = coord_index(s, c.sources[j].first);
    const int kb = coord_index(s, c.targets[j].first);
    if (ka < 0 || kb < 0) return false;
    const long base = 3 * static_cast<long>(j);
    plan.lv.push_back(ka);           // (0, ka)
    plan.lv.push_back(kb);           // (0, kb)
    plan.lv.push_back(ns + ka);      // (1, ka)
    // 3-cycle: |0,b> -> |0,a> -> |1,a> -> |0,b>.
    plan.w(base + 0, base + 1) = 1;
    plan.w(base + 2, base + 0) = 1;
    plan.w(base + 1, base + 2) = 1;
  }
  return true;
}

bool plan_merge(const Classified& c, const std::vector<Q>& s, int ns,
                double lambda_cur, double& lambda_needed, LevelPlan& plan) {
  if (c.sources.size() != 2 || c.targets.size() != 1 || !c.full_transfer)
    return false;
  const Q z1 = c.sources[0].first, p1 = c.sources[0].second;
  const Q z2 = c.sources[1].first, p2 = c.sources[1].second;
  const Q t = c.targets[0].first, w = c.targets[0].second;
  if (w != p1 + p2) return false;
  if (t == z2) return false;  // spectrum collision, numeric fallback
  const Q nu = (p1 * z1 + p2 * z2) / w;
  if (!(t > nu)) return false;
  const Q nubar = (p1 * z2 + p2 * z1) / w;
  // PSD condition: lambda * (t - nu) >= t * nubar - z1 * z2.
  const Q need = (t * nubar - z1 * z2) / (t - nu);
  lambda_needed = q_double(need);
  const int k1 = coord_index(s, z1), k2 = coord_index(s, z2),
            kt = coord_index(s, t);
  if (k1 < 0 || k2 < 0 || kt < 0) return false;
  const double c1 = std::sqrt(q_double(p1 / w)), c2 = std::sqrt(q_double(p2 / w));
  plan.lv = {k1, k2, kt, ns + k1};
  Mat oy = Mat::Zero(4, 4);
  oy.row(0) = Eigen::RowVector4d(0, 0, 0, 1);      // value z1
  oy.row(1) = Eigen::RowVector4d(0, 0, 1, 0);      // value z2
  oy.row(2) = Eigen::RowVector4d(c1, c2, 0, 0);    // value t
  oy.row(3) = Eigen::RowVector4d(c2, -c1, 0, 0);   // value lambda
  plan.w = oy.transpose();  // ox is the identity
  (void)lambda_cur;
  return true;
}

bool plan_split(const Classified& c, const std::vector<Q>& s, int ns,
                LevelPlan& plan) {
  if (c.sources.size() != 1 || c.targets.size() != 2 || !c.full_transfer)
    return false;
  const Q sb = c.sources[0].first, w = c.sources[0].second;
  const Q z1 = c.targets[0].first, q1 = c.targets[0].second;
  const Q z2 = c.targets[1].first, q2 = c.targets[1].second;
  if (w != q1 + q2) return false;
  if (z1 == 0) return false;
  // PSD condition: z1 * z2 * w >= sb * (z1 * q2 + z2 * q1).
  if (z1 * z2 * w < sb * (z1 * q2 + z2 * q1)) return false;
  const int ks = coord_index(s, sb), k1 = coord_index(s, z1),
            k2 = coord_index(s, z2);
  if (ks < 0 || k1 < 0 || k2 < 0) return false;
  const double a = std::sqrt(q_double(q1 / w)), b = std::sqrt(q_double(q2 / w));
  plan.lv = {ks, k1, k2, ns + ks, ns + k1};
  Mat ox = Mat::Zero(5, 5), oy = Mat::Zero(5, 5);
  ox.row(0) = Eigen::RowVectorXd::Unit(5, 0);  // value sb
  ox.row(1) = Eigen::RowVectorXd::Unit(5, 2);  // value z1
  ox.row(2) = Eigen::RowVectorXd::Unit(5, 3);  // value z2
  ox.row(3) = Eigen::RowVectorXd::Unit(5, 1);  // value 0
  ox.row(4) = Eigen::RowVectorXd::Unit(5, 4);  // value 0
  oy.row(0) = Eigen::RowVectorXd::Unit(5, 4);  // value sb
  oy.row(1) << a, b, 0, 0, 0;                  // value z1
  oy.row(2) << b, -a, 0, 0, 0;                 // value z2
  oy.row(3) = Eigen::RowVectorXd::Unit(5, 2);  // value lambda
  oy.row(4) = Eigen::RowVectorXd::Unit(5, 3);  // value lambda
  plan.w = ox * oy.transpose();
  return true;
}

// Orthogonal completion of a unit vector into a full basis, first column c.
Mat basis_from(const Vec& c) {
  const long d = c.size();
  Vec u = c - Vec::Unit(d, 0);
  if (u.norm() < 1e-13) return Mat::Identity(d, d);
  Mat h = Mat::Identity(d, d) - (2.0 / u.squaredNorm()) * (u * u.transpose());
  return h;  // h * e0 = c, columns orthonormal
}

Mat cayley_rotation(const Vec& theta, long d) {
  Mat k = Mat::Zero(d, d);
  long t = 0;
  for (long i = 0; i < d; ++i)
    for (long j = i + 1; j < d; ++j) {
      k(i, j) = theta(t);
      k(j, i) = -theta(t);
      ++t;
    }
  Mat num = Mat::Identity(d, d) + k;
  Mat den = Mat::Identity(d, d) - k;
  return den.colPivHouseholderQr().solve(num);
}

struct SearchResult {
  bool ok = false;
  Mat v;
  double min_eig = -1e300;
};

SearchResult stab_search(const Vec& xdiag, const Vec& ydiag, const Vec& psi,
                         const Vec& c_in, double accept_floor,
                         const RealizeOptions& opt, int esc) {
  SearchResult best;
  const long d = xdiag.size();
  Vec c = c_in;
  if (c.norm() > 0) c *= psi.norm() / c.norm();

  Mat h0;
  {
    Vec u = c - psi;
    if (u.norm() < 1e-13)
      h0 = Mat::Identity(d, d);
    else
      h0 = Mat::Identity(d, d) - (2.0 / u.squaredNorm()) * (u * u.transpose());
  }
  Mat bc = basis_from(c / c.norm());

  auto v_of = [&](const Vec& theta, bool flip) {
    Mat inner = Mat::Identity(d, d);
    if (d >= 2) {
      Mat rot = (theta.size() > 0) ? cayley_rotation(theta, d - 1)
                                   : Mat::Identity(d - 1, d - 1);
      if (flip) rot.col(d - 2) *= -1.0;
      inner.block(1, 1, d - 1, d - 1) = rot;
    }
    return h0 * bc * inner * bc.transpose();
  };
  auto eval = [&](const Mat& v) {
    Mat m = v * ydiag.asDiagonal() * v.transpose();
    m -= Mat(xdiag.asDiagonal());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()),
                                          Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  };
  auto obj = [&](const Vec& theta, bool flip) {
    Mat v = v_of(theta, flip);
    Mat m = v * ydiag.asDiagonal() * v.transpose();
    m -= Mat(xdiag.asDiagonal());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()),
                                          Eigen::EigenvaluesOnly);
    double f = 0;
    for (long i = 0; i < d; ++i) {
      const double neg = std::min(0.0, es.eigenvalues()(i));
      f += neg * neg;
    }
    return f;
  };

  const long np = (d >= 3) ? (d - 1) * (d - 2) / 2 : 0;
  std::mt19937_64 rng(opt.seed + 977u * static_cast<unsigned long>(esc));
  std::normal_distribution<double> gauss(0.0, 0.7);

  for (int r = 0; r < std::max(2, opt.restarts); ++r) {
    const bool flip = (r % 2) == 1;
    Vec theta = Vec::Zero(np);
    if (r >= 2)
      for (long t = 0; t < np; ++t) theta(t) = gauss(rng);
    double f = obj(theta, flip);
    for (int it = 0; it < opt.max_iters && np > 0; ++it) {
      if (f == 0) break;
      Vec g(np);
      const double h = 1e-6;
      for (long t = 0; t < np; ++t) {
        Vec tp = theta, tm = theta;
        tp(t) += h;
        tm(t) -= h;
        g(t) = (obj(tp, flip) - obj(tm, flip)) / (2 * h);
      }
      const double gn = g.norm();
      if (gn < 1e-15) break;
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 25; ++ls) {
        Vec cand = theta - alpha * g;
        const double fc = obj(cand, flip);
        if (fc < f - 1e-4 * alpha * gn * gn) {
          theta = cand;
          f = fc;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    Mat v = v_of(theta, flip);
    const double me = eval(v);
    if (me > best.min_eig) {
      best.min_eig = me;
      best.v = v;
    }
    if (best.min_eig >= accept_floor) {
      best.ok = true;
      return best;
    }
  }
  best.ok = best.min_eig >= accept_floor;
  return best;
}

bool plan_numeric(const PointFn1D& p, const PointFn1D& q,
                  const std::vector<Q>& s, int ns, double lambda,
                  const RealizeOptions& opt, LevelPlan& plan,
                  std::string& note) {
  std::vector<Q> vp, vq;
  for (const auto& zw : p.w) vp.push_back(zw.first);
  for (const auto& zw : q.w) vq.push_back(zw.first);
  std::vector<Q> inter, uni;
  std::set_intersection(vp.begin(), vp.end(), vq.begin(), vq.end(),
                        std::back_inserter(inter));
  std::set_union(vp.begin(), vp.end(), vq.begin(), vq.end(),
                 std::back_inserter(uni));
  const int d0 = static_cast<int>(vp.size() + vq.size()) - 1;
  if (d0 < 2) return false;
  const double accept_floor = -0.5 * opt.psd_tol_scale * (1.0 + lambda);

  for (int esc = 0; esc <= 2; ++esc) {
    const int d = d0 + esc;
    const int n_anc = d - static_cast<int>(inter.size());
    if (n_anc > ns) {
      note = "numeric: ran out of flagged levels during escalation";
      break;
    }
    Vec xdiag = Vec::Zero(d), ydiag = Vec::Zero(d), psi = Vec::Zero(d),
        c = Vec::Zero(d);
    {
      long j = 0;
      for (const auto& zw : p.w) {
        xdiag(j) = q_double(zw.first);
        psi(j) = std::sqrt(q_double(zw.second));
        ++j;
      }
      for (; j < d; ++j) xdiag(j) = 0;
    }
    {
      long j = 0;
      for (const auto& zw : q.w) {
        ydiag(j) = q_double(zw.first);
        c(j) = std::sqrt(q_double(zw.second));
        ++j;
      }
      for (; j < d; ++j) ydiag(j) = lambda;
    }
    SearchResult sr = stab_search(xdiag, ydiag, psi, c, accept_floor, opt, esc);
    if (!sr.ok) {
      std::ostringstream os;
      os << "numeric: dimension " << d << " best slack " << sr.min_eig;
      note = os.str();
      continue;
    }
    if (esc > 0) {
      std::ostringstream os;
      os << "numeric: escalated block dimension to " << d << " (base " << d0
         << ")";
      note = os.str();
    }
    // Assemble: search dims 0..d-1, then one padding dim per one-sided value.
    std::vector<Q> pad_x, pad_y;  // pad_x: values in q only; pad_y: in p only
    for (const Q& v : uni) {
      const bool inp = coord_index(vp, v) >= 0, inq = coord_index(vq, v) >= 0;
      if (inq && !inp) pad_x.push_back(v);
      if (inp && !inq) pad_y.push_back(v);
    }
    const int m = d + static_cast<int>(pad_x.size() + pad_y.size());
    std::map<Q, int> pad_x_dim, pad_y_dim;
    {
      int next = d;
      for (const Q& v : pad_x) pad_x_dim[v] = next++;
      for (const Q& v : pad_y) pad_y_dim[v] = next++;
    }
    plan.lv.clear();
    Mat ox = Mat::Zero(m, m), oy = Mat::Zero(m, m);
    int row = 0;
    for (const Q& v : uni) {
      plan.lv.push_back(coord_index(s, v));
      const int jp = coord_index(vp, v), jq = coord_index(vq, v);
      if (jp >= 0)
        ox(row, jp) = 1;
      else
        ox(row, pad_x_dim[v]) = 1;
      if (jq >= 0)
        oy.row(row).segment(0, d) = sr.v.col(jq).transpose();
      else
        oy(row, pad_y_dim[v]) = 1;
      ++row;
    }
    std::vector<int> anc_x, anc_y;
    for (int j = static_cast<int>(vp.size()); j < d; ++j) anc_x.push_back(j);
    for (const Q& v : pad_y) anc_x.push_back(pad_y_dim[v]);
    for (int j = static_cast<int>(vq.size()); j < d; ++j) anc_y.push_back(j);
    for (const Q& v : pad_x) anc_y.push_back(pad_x_dim[v]);
    const int n_flag = m - static_cast<int>(uni.size());
    for (int j = 0; j < n_flag; ++j) {
      plan.lv.push_back(ns + j);
      const int ax = anc_x[static_cast<size_t>(j)];
      const int ay = anc_y[static_cast<size_t>(j)];
      ox(row, ax) = 1;
      if (ay < d)
        oy.row(row).segment(0, d) = sr.v.col(ay).transpose();
      else
        oy(row, ay) = 1;
      ++row;
    }
    plan.w = ox * oy.transpose();
    return true;
  }
  if (note.empty()) note = "numeric: search failed";
  return false;
}

}  // namespace

RealizeOutcome realize_transition(const PointFn1D& p, const PointFn1D& q,
                                  const std::vector<Q>& s,
                                  const RealizeOptions& opt) {
  for (size_t i = 1; i < s.size(); ++i)
    if (!(s[i - 1] < s[i]))
      throw std::invalid_argument("realize: axis coordinates must be ascending");
  for (const auto& zw : p.w)
    if (coord_index(s, zw.first) < 0)
      throw std::invalid_argument("realize: input support is off the axis list");
  for (const auto& zw : q.w)
    if (coord_index(s, zw.first) < 0)
      throw std::invalid_argument("realize: output support is off the axis list");

  const int ns = static_cast<int>(s.size());
  double lam0 = opt.lambda;
  if (lam0 <= 0) {
    double mx = 1;
    for (const Q& v : s) mx = std::max(mx, q_double(v));
    lam0 = 4 * mx;
  }

  if (p == q) {
    LevelPlan plan;
    plan.w = Mat(0, 0);
    return finish_plan(plan, RealizeBranch::identity, p, q, s, lam0, opt);
  }

  LineVerdict lv = check_transition_1d(p, q, true);
  if (!lv.accepted) {
    RealizeOutcome out;
    out.message = "realize: transition is not strictly valid: " + lv.diagnostic;
    out.lambda = lam0;
    return out;
  }

  const Classified cls = classify_diff(p, q);

  {
    LevelPlan plan;
    if (plan_relocation(cls, s, ns, plan))
      return finish_plan(plan, RealizeBranch::relocation, p, q, s, lam0, opt);
  }
  {
    LevelPlan plan;
    double need = 0;
    if (plan_merge(cls, s, ns, lam0, need, plan)) {
      double lam = lam0;
      for (int k = 0; k < opt.lambda_doublings && lam < need * (1 + 1e-9); ++k)
        lam *= 2;
      return finish_plan(plan, RealizeBranch::merge, p, q, s, lam, opt);
    }
  }
  {
    LevelPlan plan;
    if (plan_split(cls, s, ns, plan))
      return finish_plan(plan, RealizeBranch::split, p, q, s, lam0, opt);
  }

  if (!opt.allow_numeric) {
    RealizeOutcome out;
    out.message = "realize: no closed form applies and numeric search is off";
    out.lambda = lam0;
    return out;
  }
  double lam = lam0;
  std::string note;
  for (int k = 0; k <= opt.lambda_doublings; ++k) {
    LevelPlan plan;
    std::string local;
    if (plan_numeric(p, q, s, ns, lam, opt, plan, local)) {
      RealizeOutcome out =
          finish_plan(plan, RealizeBranch::numeric, p, q, s, lam, opt);
      if (!local.empty()) out.message += "; " + local;
      return out;
    }
    note = local;
    lam *= 2;
  }
  RealizeOutcome out;
  out.branch = RealizeBranch::numeric;
  out.lambda = lam;
  out.message = "realize: " + (note.empty() ? std::string("numeric search failed") : note);
  return out;
}

// ---------------------------------------------------------------------------
// compile_tdpg

namespace {

struct LineRealization {
  Q key;             // the fixed coordinate of the line
  RealizeOutcome out;
};

}  // namespace

CompileResult compile_tdpg(const TDPG& g, const CompileOptions& opt) {
  GameReport rep = verify_tdpg(g);
  if (!rep.accepted) {
    std::string why = rep.failures.empty()
                          ? std::string("unspecified")
                          : rep.failures.front().first + ": " +
                                rep.failures.front().second;
    throw std::invalid_argument("compile_tdpg: input game rejected (" + why + ")");
  }
  const int n = static_cast<int>(g.frames.size()) - 1;
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument(
        "compile_tdpg: needs an even transition count (vertical first); run "
        "strictify_tdpg");
  const Q beta = rep.final_point->first;
  const Q alpha = rep.final_point->second;

  std::set<Q> xs{Q(0), Q(1), beta}, ys{Q(0), Q(1), alpha};
  for (const auto& fr : g.frames)
    for (const auto& pw : fr.fn.w) {
      xs.insert(pw.first.first);
      ys.insert(pw.first.second);
    }
  std::vector<Q> s_a(xs.begin(), xs.end()), s_b(ys.begin(), ys.end());
  const int na = static_cast<int>(s_a.size()), nb = static_cast<int>(s_b.size());

  double lam = opt.realize.lambda;
  if (lam <= 0) {
    double mx = 1;
    for (const Q& v : s_a) mx = std::max(mx, q_double(v));
    for (const Q& v : s_b) mx = std::max(mx, q_double(v));
    lam = 4 * mx;
  }

  const int d_a = 2 * na, d_m = na * nb, d_b = 2 * nb;
  const int ka_beta = coord_index(s_a, beta), kb_alpha = coord_index(s_b, alpha);
  const int ka_one = coord_index(s_a, Q(1)), kb_one = coord_index(s_b, Q(1));

  // Honest amplitudes on the matched-register subspace, frame n first.
  Mat amp = Mat::Zero(na, nb);
  amp(ka_beta, kb_alpha) = 1.0;

  CompileResult res;
  res.s_a = s_a;
  res.s_b = s_b;
  res.proj_fail.assign(static_cast<size_t>(n), 0.0);

  std::vector<std::vector<LineRealization>> per_step(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const int j = n - i + 1;  // game transition riding this round
    const bool alice = (i % 2 == 1);
    const Axis axis = alice ? Axis::horizontal : Axis::vertical;
    const std::vector<Q>& s_axis = alice ? s_a : s_b;
    auto lines_p = g.frames[static_cast<size_t>(j - 1)].fn.lines(axis);
    auto lines_q = g.frames[static_cast<size_t>(j)].fn.lines(axis);
    std::set<Q> keys;
    for (const auto& kv : lines_p) keys.insert(kv.first);
    for (const auto& kv : lines_q) keys.insert(kv.first);
    for (const Q& key : keys) {
      PointFn1D pl, ql;
      if (auto it = lines_p.find(key); it != lines_p.end()) pl = it->second;
      if (auto it = lines_q.find(key); it != lines_q.end()) ql = it->second;
      RealizeOptions ro = opt.realize;
      ro.lambda = lam;
      RealizeOutcome out = realize_transition(pl, ql, s_axis, ro);
      if (!out.ok) {
        std::ostringstream os;
        os << "compile_tdpg: transition " << j << ", line "
           << (alice ? "y=" : "x=") << q_str(key) << ": " << out.message;
        throw std::runtime_error(os.str());
      }
      lam = std::max(lam, out.lambda);
      if (!out.u.idx.empty())
        per_step[static_cast<size_t>(i - 1)].push_back({key, std::move(out)});
    }

    // Advance the honest amplitudes and compare with the target frame.
    double leak = 0;
    for (const auto& lr : per_step[static_cast<size_t>(i - 1)]) {
      const auto& blk = lr.out.u;
      const int m = static_cast<int>(blk.idx.size());
      const int line_k = alice ? coord_index(s_b, lr.key) : coord_index(s_a, lr.key);
      Vec v(m);
      for (int r = 0; r < m; ++r) {
        const int level = blk.idx[r];
        const int f = (alice ? level / na : level / nb);
        const int k = (alice ? level % na : level % nb);
        v(r) = (f == 0) ? (alice ? amp(k, line_k) : amp(line_k, k)) : 0.0;
      }
      Vec r2 = blk.w * v;
      for (int r = 0; r < m; ++r) {
        const int level = blk.idx[r];
        const int f = (alice ? level / na : level / nb);
        const int k = (alice ? level % na : level % nb);
        if (f == 0) {
          if (alice)
            amp(k, line_k) = r2(r);
          else
            amp(line_k, k) = r2(r);
        } else {
          leak += r2(r) * r2(r);
        }
      }
    }
    res.proj_fail[static_cast<size_t>(i - 1)] = leak;

    double err = 0;
    const PointFn2D& want = g.frames[static_cast<size_t>(j - 1)].fn;
    for (int ka = 0; ka < na; ++ka)
      for (int kb = 0; kb < nb; ++kb) {
        const double have = amp(ka, kb) * amp(ka, kb);
        const double target = q_double(want.at(s_a[static_cast<size_t>(ka)],
                                               s_b[static_cast<size_t>(kb)]));
        err = std::max(err, std::abs(have - target));
      }
    res.frame_checks.push_back({j - 1, err});
    if (err > opt.frame_tol) {
      std::ostringstream os;
      os << "compile_tdpg: frame " << (j - 1) << " mismatch " << err
         << " after round " << i;
      throw std::runtime_error(os.str());
    }
  }

  double pa = 0, pb = 0;
  for (int kb = 0; kb < nb; ++kb)
    if (kb != kb_one) pb += amp(ka_one, kb) * amp(ka_one, kb);
  for (int ka = 0; ka < na; ++ka)
    if (ka != ka_one) pa += amp(ka, kb_one) * amp(ka, kb_one);
  res.pa = pa;
  res.pb = pb;
  res.lambda = lam;

  // Assemble the protocol.
  Protocol proto;
  proto.d_a = d_a;
  proto.d_m = d_m;
  proto.d_b = d_b;
  proto.n = n;
  proto.psi_a0 = Vec::Zero(d_a);
  proto.psi_a0(ka_beta) = 1.0;
  proto.psi_m0 = Vec::Zero(d_m);
  proto.psi_m0(static_cast<long>(ka_beta) * nb + kb_alpha) = 1.0;
  proto.psi_b0 = Vec::Zero(d_b);
  proto.psi_b0(static_cast<long>(kb_alpha) * 2) = 1.0;
  proto.pi_a1 = Mat::Zero(d_a, d_a);
  proto.pi_a1(ka_one, ka_one) = 1.0;
  proto.pi_b0 = Mat::Zero(d_b, d_b);
  proto.pi_b0(2 * kb_one, 2 * kb_one) = 1.0;

  for (int i = 1; i <= n; ++i) {
    const bool alice = (i % 2 == 1);
    StepUnitary st;
    st.dim = alice ? d_a * d_m : d_m * d_b;
    for (const auto& lr : per_step[static_cast<size_t>(i - 1)]) {
      BlockOp emb;
      emb.w = lr.out.u.w;
      const int m = static_cast<int>(lr.out.u.idx.size());
      emb.idx.resize(static_cast<size_t>(m));
      if (alice) {
        const int jb = coord_index(s_b, lr.key);
        for (int r = 0; r < m; ++r) {
          const int f = lr.out.u.idx[r] / na, k = lr.out.u.idx[r] % na;
          const long a = static_cast<long>(f) * na + k;
          const long mm = static_cast<long>(k) * nb + jb;
          emb.idx[static_cast<size_t>(r)] = static_cast<int>(a * d_m + mm);
        }
      } else {
        const int ja = coord_index(s_a, lr.key);
        for (int r = 0; r < m; ++r) {
          const int f = lr.out.u.idx[r] / nb, k = lr.out.u.idx[r] % nb;
          const long mm = static_cast<long>(ja) * nb + k;
          const long b = static_cast<long>(k) * 2 + f;
          emb.idx[static_cast<size_t>(r)] = static_cast<int>(mm * d_b + b);
        }
      }
      st.blocks.push_back(std::move(emb));
    }
    proto.steps.push_back(std::move(st));
  }

  std::vector<char> e_a(static_cast<size_t>(d_a) * d_m, 0);
  for (int f = 0; f < 2; ++f)
    for (int ka = 0; ka < na; ++ka)
      for (int ka2 = 0; ka2 < na; ++ka2)
        for (int kb = 0; kb < nb; ++kb) {
          const long a = static_cast<long>(f) * na + ka;
          const long mm = static_cast<long>(ka2) * nb + kb;
          e_a[static_cast<size_t>(a * d_m + mm)] = (f == 0 && ka == ka2) ? 1 : 0;
        }
  std::vector<char> e_b(static_cast<size_t>(d_m) * d_b, 0);
  for (int ka = 0; ka < na; ++ka)
    for (int kb = 0; kb < nb; ++kb)
      for (int kb2 = 0; kb2 < nb; ++kb2)
        for (int f = 0; f < 2; ++f) {
          const long mm = static_cast<long>(ka) * nb + kb;
          const long b = static_cast<long>(kb2) * 2 + f;
          e_b[static_cast<size_t>(mm * d_b + b)] = (f == 0 && kb2 == kb) ? 1 : 0;
        }
  proto.e_a = std::move(e_a);
  proto.e_b = std::move(e_b);

  UBP ubp;
  ubp.beta = q_double(beta);
  ubp.alpha = q_double(alpha);
  Mat z_a = Mat::Zero(d_a, d_a), z_b = Mat::Zero(d_b, d_b);
  for (int k = 0; k < na; ++k) {
    z_a(k, k) = q_double(s_a[static_cast<size_t>(k)]);
    z_a(na + k, na + k) = lam;
  }
  for (int k = 0; k < nb; ++k) {
    z_b(2 * k, 2 * k) = q_double(s_b[static_cast<size_t>(k)]);
    z_b(2 * k + 1, 2 * k + 1) = lam;
  }
  ubp.za.assign(static_cast<size_t>(n + 1), z_a);
  ubp.za[static_cast<size_t>(n - 1)] = proto.pi_a1;
  ubp.za[static_cast<size_t>(n)] = proto.pi_a1;
  ubp.zb.assign(static_cast<size_t>(n + 1), z_b);
  ubp.zb[static_cast<size_t>(n)] = proto.pi_b0;
  ubp.proto = std::move(proto);
  res.ubp = std::move(ubp);

  if (opt.run_verify) res.report = verify_ubp(res.ubp, opt.verify);
  return res;
}

// ---------------------------------------------------------------------------
// honest_run

HonestRun honest_run(const Protocol& p) {
  if (p.full_dim() > 4000000)
    throw std::runtime_error("honest_run: state too large for a dense run");
  HonestRun hr;
  Vec psi = detail::kron_vec(detail::kron_vec(p.psi_a0, p.psi_m0), p.psi_b0);
  hr.psi.push_back(psi);
  for (int i = 1; i <= p.n; ++i) {
    const bool odd = (i % 2 == 1);
    psi = detail::apply_step_full(p.steps[static_cast<size_t>(i - 1)], odd, psi,
                                  p.d_a, p.d_m, p.d_b);
    double fail = 0;
    if (odd && p.e_a)
      fail = detail::apply_diag_proj_full(*p.e_a, true, psi, p.d_a, p.d_m, p.d_b);
    if (!odd && p.e_b)
      fail = detail::apply_diag_proj_full(*p.e_b, false, psi, p.d_a, p.d_m, p.d_b);
    hr.proj_fail.push_back(fail);
    if (fail > 1e-9) {
      std::ostringstream os;
      os << "honest_run: verification branch mass " << fail << " after round " << i;
      throw std::runtime_error(os.str());
    }
    hr.psi.push_back(psi);
  }
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> m_a(psi.data(), p.d_a,
                               static_cast<long>(p.d_m) * p.d_b);
  Mat rho_a = m_a * m_a.transpose();
  hr.pb = (p.pi_a1 * rho_a).trace();
  Eigen::Map<const RowMat> m_b(psi.data(), static_cast<long>(p.d_a) * p.d_m,
                               p.d_b);
  Mat rho_b = m_b.transpose() * m_b;
  hr.pa = (p.pi_b0 * rho_b).trace();

  auto apply_a = [&](const Mat& op, const Vec& v) {
    Vec out(v.size());
    Eigen::Map<const RowMat> src(v.data(), p.d_a, static_cast<long>(p.d_m) * p.d_b);
    Eigen::Map<RowMat> dst(out.data(), p.d_a, static_cast<long>(p.d_m) * p.d_b);
    dst = op * src;
    return out;
  };
  auto apply_b = [&](const Mat& op, const Vec& v) {
    Vec out(v.size());
    Eigen::Map<const RowMat> src(v.data(), static_cast<long>(p.d_a) * p.d_m, p.d_b);
    Eigen::Map<RowMat> dst(out.data(), static_cast<long>(p.d_a) * p.d_m, p.d_b);
    dst = src * op.transpose();
    return out;
  };
  const Mat id_a = Mat::Identity(p.d_a, p.d_a);
  const Mat id_b = Mat::Identity(p.d_b, p.d_b);
  const Vec v1 = apply_b(p.pi_b0, apply_a(p.pi_a1, psi));
  const Vec v2 = apply_b(id_b - p.pi_b0, apply_a(id_a - p.pi_a1, psi));
  hr.agree_residual = std::max(v1.norm(), v2.norm());
  return hr;
}

}  // namespace wcf
