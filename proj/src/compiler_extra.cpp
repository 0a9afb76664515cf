#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "compiler_internal.hpp"
#include "wcf/compiler.hpp"

namespace wcf {

namespace {

using detail::apply_diag_proj_full;
using detail::apply_step_full;
using detail::apply_step_full_adjoint;

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// ---------------------------------------------------------------------------
// Measurement removal
// ---------------------------------------------------------------------------

// Expanded acting-space permutation composed after I (x) U: on the subspace
// where every other own-side ancilla qubit is zero, the bit owned by this
// round is flipped exactly when the round's keep mask rejects the acting
// index, so the rejection is recorded instead of enforced.
SpMat outcome_recording_step(const StepUnitary& st, const std::vector<char>* e,
                             int bit, int n_anc, bool anc_high) {
  const long d = st.dim;
  const long mask = 1l << bit;
  const long others = (static_cast<long>(n_anc) - 1) & ~mask;
  SpMat base = st.to_sparse();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(base.nonZeros()) *
                static_cast<size_t>(n_anc));
  for (int k = 0; k < base.outerSize(); ++k)
    for (SpMat::InnerIterator it(base, k); it; ++it) {
      const long r = it.row();
      const long c = it.col();
      const bool reject = e && !(*e)[static_cast<size_t>(r)];
      for (long anc = 0; anc < n_anc; ++anc) {
        long anc_out = anc;
        if ((anc & others) == 0 && reject) anc_out = anc ^ mask;
        long row, col;
        if (anc_high) {
          row = anc_out * d + r;
          col = anc * d + c;
        } else {
          row = r * n_anc + anc_out;
          col = c * n_anc + anc;
        }
        trips.emplace_back(row, col, it.value());
      }
    }
  SpMat out(d * n_anc, d * n_anc);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

// Certificate for round index i of the expanded protocol, Alice's side. The
// ancilla-zero corner carries the original certificate padded by the
// remaining-round allowance; ancilla patterns whose newest recorded rejection
// belongs to a later round get the ladder constant, earlier ones get zero.
Mat expanded_cert(const Mat& z, int i, int n, double eps, double lam,
                  int n_anc, int rounds_per_bit_offset, bool anc_high) {
  const int d = static_cast<int>(z.rows());
  const long dim = static_cast<long>(d) * n_anc;
  Mat out = Mat::Zero(dim, dim);
  for (long anc = 0; anc < n_anc; ++anc) {
    if (anc == 0) {
      Mat corner = z + (n - i) * eps * Mat::Identity(d, d);
      if (anc_high)
        out.block(0, 0, d, d) = corner;
      else
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c)
            out(static_cast<long>(r) * n_anc, static_cast<long>(c) * n_anc) =
                corner(r, c);
      continue;
    }
    bool later = false;
    for (int t = 1; (1l << (t - 1)) <= anc; ++t)
      if ((anc >> (t - 1)) & 1) {
        const int round = 2 * t - rounds_per_bit_offset;
        if (round > i) later = true;
      }
    if (!later) continue;
    for (int r = 0; r < d; ++r) {
      const long pos = anc_high ? anc * d + r
                                : static_cast<long>(r) * n_anc + anc;
      out(pos, pos) = lam;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// See-saw helpers
// ---------------------------------------------------------------------------

Vec apply_dense_round(const Mat& u, bool odd, const Vec& psi, int d_a, int d_m,
                      int d_b) {
  Vec out(psi.size());
  if (odd) {
    Eigen::Map<const RowMat> m(psi.data(), static_cast<long>(d_a) * d_m, d_b);
    Eigen::Map<RowMat> r(out.data(), static_cast<long>(d_a) * d_m, d_b);
    r = u * m;
  } else {
    Eigen::Map<const RowMat> m(psi.data(), d_a, static_cast<long>(d_m) * d_b);
    Eigen::Map<RowMat> r(out.data(), d_a, static_cast<long>(d_m) * d_b);
    r = (u * m.transpose()).transpose();
  }
  return out;
}

Vec apply_povm_a(const Mat& pi, const Vec& psi, int d_a, int d_m, int d_b) {
  Vec out(psi.size());
  Eigen::Map<const RowMat> m(psi.data(), d_a, static_cast<long>(d_m) * d_b);
  Eigen::Map<RowMat> r(out.data(), d_a, static_cast<long>(d_m) * d_b);
  r = pi * m;
  return out;
}

Vec apply_povm_b(const Mat& pi, const Vec& psi, int d_a, int d_m, int d_b) {
  Vec out(psi.size());
  Eigen::Map<const RowMat> m(psi.data(), static_cast<long>(d_a) * d_m, d_b);
  Eigen::Map<RowMat> r(out.data(), static_cast<long>(d_a) * d_m, d_b);
  r = m * pi.transpose();
  return out;
}

struct SeesawWork {
  const Protocol* p = nullptr;
  bool bob = false;
  std::vector<Mat> v;  // cheater unitaries indexed by own round order
  Vec chi;

  int chi_dim() const {
    return bob ? p->d_m * p->d_b : p->d_a;
  }
  int v_dim() const {
    return bob ? p->d_m * p->d_b : p->d_a * p->d_m;
  }
  bool cheater_round(int i) const { return bob ? i % 2 == 0 : i % 2 == 1; }
  int own_index(int i) const { return bob ? i / 2 - 1 : (i - 1) / 2; }

  Vec embed(const Vec& x) const {
    const int dmb = p->d_m * p->d_b;
    Vec full(p->full_dim());
    if (bob) {
      for (int a = 0; a < p->d_a; ++a)
        full.segment(static_cast<long>(a) * dmb, dmb) = p->psi_a0(a) * x;
    } else {
      Vec mb(dmb);
      for (int m = 0; m < p->d_m; ++m)
        for (int b = 0; b < p->d_b; ++b)
          mb(static_cast<long>(m) * p->d_b + b) = p->psi_m0(m) * p->psi_b0(b);
      for (int a = 0; a < p->d_a; ++a)
        full.segment(static_cast<long>(a) * dmb, dmb) = x(a) * mb;
    }
    return full;
  }

  Vec extract(const Vec& full) const {
    const int dmb = p->d_m * p->d_b;
    if (bob) {
      Vec out = Vec::Zero(dmb);
      for (int a = 0; a < p->d_a; ++a)
        out += p->psi_a0(a) * full.segment(static_cast<long>(a) * dmb, dmb);
      return out;
    }
    Vec mb(dmb);
    for (int m = 0; m < p->d_m; ++m)
      for (int b = 0; b < p->d_b; ++b)
        mb(static_cast<long>(m) * p->d_b + b) = p->psi_m0(m) * p->psi_b0(b);
    Vec out(p->d_a);
    for (int a = 0; a < p->d_a; ++a)
      out(a) = mb.dot(full.segment(static_cast<long>(a) * dmb, dmb));
    return out;
  }

  // Applies rounds lo..hi inclusive; honest rounds keep only the accepted
  // branch of the honest player's intermediate measurement.
  Vec run(Vec s, int lo, int hi) const {
    for (int i = lo; i <= hi; ++i) {
      const bool odd = i % 2 == 1;
      if (cheater_round(i)) {
        s = apply_dense_round(v[static_cast<size_t>(own_index(i))], odd, s,
                              p->d_a, p->d_m, p->d_b);
      } else {
        s = apply_step_full(p->steps[static_cast<size_t>(i - 1)], odd, s,
                            p->d_a, p->d_m, p->d_b);
        const auto& e = odd ? p->e_a : p->e_b;
        if (e) apply_diag_proj_full(*e, odd, s, p->d_a, p->d_m, p->d_b);
      }
    }
    return s;
  }

  Vec run_adjoint(Vec s, int hi, int lo) const {
    for (int i = hi; i >= lo; --i) {
      const bool odd = i % 2 == 1;
      if (cheater_round(i)) {
        s = apply_dense_round(
            v[static_cast<size_t>(own_index(i))].transpose(), odd, s, p->d_a,
            p->d_m, p->d_b);
      } else {
        const auto& e = odd ? p->e_a : p->e_b;
        if (e) apply_diag_proj_full(*e, odd, s, p->d_a, p->d_m, p->d_b);
        s = apply_step_full_adjoint(p->steps[static_cast<size_t>(i - 1)], odd,
                                    s, p->d_a, p->d_m, p->d_b);
      }
    }
    return s;
  }

  Vec objective_op(const Vec& s) const {
    return bob ? apply_povm_a(p->pi_a1, s, p->d_a, p->d_m, p->d_b)
               : apply_povm_b(p->pi_b0, s, p->d_a, p->d_m, p->d_b);
  }

  double objective() const {
    Vec fin = run(embed(chi), 1, p->n);
    return objective_op(fin).squaredNorm();
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// projections_to_unitary
// ---------------------------------------------------------------------------

ProjectionsResult projections_to_unitary(const UBP& u,
                                         const ProjectionsOptions& opt) {
  ProjectionsResult res;
  const Protocol& P = u.proto;
  if (!P.has_projections()) {
    res.ubp = u;
    res.ok = true;
    res.message = "no intermediate measurements to remove";
    return res;
  }
  const int n = P.n;
  require(n >= 2 && n % 2 == 0 &&
              static_cast<int>(P.steps.size()) == n &&
              u.za.size() == static_cast<size_t>(n + 1) &&
              u.zb.size() == static_cast<size_t>(n + 1),
          "projections_to_unitary: malformed input");
  const int qubits = n / 2;
  const int n_anc = 1 << qubits;
  const double eps = opt.eps;
  const int d_a = P.d_a, d_m = P.d_m, d_b = P.d_b;
  const long acting_a = static_cast<long>(n_anc) * d_a * d_m;
  const long acting_b = static_cast<long>(d_m) * d_b * n_anc;
  if (std::max(acting_a, acting_b) > 2000000l) {
    res.ok = false;
    res.message = "expanded acting space too large";
    return res;
  }

  Protocol Q;
  Q.d_a = n_anc * d_a;
  Q.d_m = d_m;
  Q.d_b = d_b * n_anc;
  Q.n = n;
  Q.psi_a0 = Vec::Zero(Q.d_a);
  Q.psi_a0.segment(0, d_a) = P.psi_a0;
  Q.psi_m0 = P.psi_m0;
  Q.psi_b0 = Vec::Zero(Q.d_b);
  for (int b = 0; b < d_b; ++b) Q.psi_b0(static_cast<long>(b) * n_anc) = P.psi_b0(b);
  Q.pi_a1 = Mat::Zero(Q.d_a, Q.d_a);
  Q.pi_a1.block(0, 0, d_a, d_a) = P.pi_a1;
  Q.pi_b0 = Mat::Zero(Q.d_b, Q.d_b);
  for (int b = 0; b < d_b; ++b)
    for (int c = 0; c < d_b; ++c)
      Q.pi_b0(static_cast<long>(b) * n_anc, static_cast<long>(c) * n_anc) =
          P.pi_b0(b, c);

  for (int i = 1; i <= n; ++i) {
    const bool odd = i % 2 == 1;
    const int t = odd ? (i + 1) / 2 : i / 2;
    const std::vector<char>* e = nullptr;
    if (odd && P.e_a) e = &*P.e_a;
    if (!odd && P.e_b) e = &*P.e_b;
    StepUnitary st;
    st.dim = odd ? acting_a : acting_b;
    st.sparse = outcome_recording_step(P.steps[static_cast<size_t>(i - 1)], e,
                                       t - 1, n_anc, odd);
    Q.steps.push_back(std::move(st));
  }

  // Alice's recording rounds are the odd ones, so her bit t covers round
  // 2t - 1; Bob's bit t covers round 2t.
  const int off_a = 1, off_b = 0;
  std::vector<Mat> za(static_cast<size_t>(n + 1)), zb(static_cast<size_t>(n + 1));
  res.lambda_ladder_a.assign(static_cast<size_t>(n + 1), 0.0);
  res.lambda_ladder_b.assign(static_cast<size_t>(n + 1), 0.0);

  za[static_cast<size_t>(n)] =
      expanded_cert(u.za[static_cast<size_t>(n)], n, n, eps, 0.0, n_anc, off_a,
                    true);
  zb[static_cast<size_t>(n)] =
      expanded_cert(u.zb[static_cast<size_t>(n)], n, n, eps, 0.0, n_anc, off_b,
                    false);

  auto ladder_rung = [&](bool alice, int i, const Mat& mid,
                         double lam_above) -> std::pair<bool, double> {
    const Mat& z = alice ? u.za[static_cast<size_t>(i)]
                         : u.zb[static_cast<size_t>(i)];
    const double cross = 1.0 + z.cwiseAbs().maxCoeff() + n * eps;
    double lam = lam_above + cross + cross * cross / eps;
    const int j = i + 1;
    const StepUnitary& st = Q.steps[static_cast<size_t>(j - 1)];
    for (int k = 0; k <= opt.lambda_doublings; ++k, lam *= 2) {
      Mat lhs = expanded_cert(z, i, n, eps, lam, n_anc,
                              alice ? off_a : off_b, alice);
      const double scale =
          1.0 + std::max(lhs.cwiseAbs().maxCoeff(), mid.cwiseAbs().maxCoeff());
      auto r = detail::dual_constraint_slack(st, lhs, mid, nullptr, alice,
                                             Q.d_a, Q.d_m, Q.d_b, 2000,
                                             opt.ineq_tol_scale * scale);
      if (r.ok) return {true, lam};
    }
    return {false, lam};
  };

  for (int i = n - 2; i >= 0; i -= 2) {
    const Mat& mid = za[static_cast<size_t>(i + 2)];
    auto [ok, lam] = ladder_rung(true, i, mid, res.lambda_ladder_a[static_cast<size_t>(i + 2)]);
    if (!ok) {
      std::ostringstream os;
      os << "ladder exhausted on alice's side at round " << i;
      res.message = os.str();
      res.ok = false;
      return res;
    }
    res.lambda_ladder_a[static_cast<size_t>(i)] = lam;
    za[static_cast<size_t>(i)] =
        expanded_cert(u.za[static_cast<size_t>(i)], i, n, eps, lam, n_anc,
                      off_a, true);
  }
  for (int i = n - 1; i >= 1; i -= 2) {
    Mat mid;
    if (i + 1 == n)
      mid = zb[static_cast<size_t>(n)];
    else
      mid = zb[static_cast<size_t>(i + 2)];
    auto [ok, lam] = ladder_rung(false, i, mid,
                                 i + 2 <= n ? res.lambda_ladder_b[static_cast<size_t>(i + 2)] : 0.0);
    if (!ok) {
      std::ostringstream os;
      os << "ladder exhausted on bob's side at round " << i;
      res.message = os.str();
      res.ok = false;
      return res;
    }
    res.lambda_ladder_b[static_cast<size_t>(i)] = lam;
    zb[static_cast<size_t>(i)] =
        expanded_cert(u.zb[static_cast<size_t>(i)], i, n, eps, lam, n_anc,
                      off_b, false);
  }
  for (int j = n - 1; j >= 1; j -= 2) {
    za[static_cast<size_t>(j)] = za[static_cast<size_t>(j + 1)];
    res.lambda_ladder_a[static_cast<size_t>(j)] =
        res.lambda_ladder_a[static_cast<size_t>(j + 1)];
  }
  for (int j = n - 2; j >= 0; j -= 2) {
    zb[static_cast<size_t>(j)] = zb[static_cast<size_t>(j + 1)];
    res.lambda_ladder_b[static_cast<size_t>(j)] =
        res.lambda_ladder_b[static_cast<size_t>(j + 1)];
  }

  res.ubp.proto = std::move(Q);
  res.ubp.za = std::move(za);
  res.ubp.zb = std::move(zb);
  res.ubp.beta = u.beta + n * eps;
  res.ubp.alpha = u.alpha + n * eps;
  res.ok = true;
  return res;
}

// ---------------------------------------------------------------------------
// seesaw_cheat
// ---------------------------------------------------------------------------

SeesawResult seesaw_cheat(const Protocol& p, bool cheater_is_bob,
                          int max_rounds, unsigned long seed) {
  require(p.n >= 2 && p.n % 2 == 0 &&
              static_cast<int>(p.steps.size()) == p.n,
          "seesaw_cheat: malformed protocol");
  if (p.full_dim() > 200000)
    throw std::invalid_argument("seesaw_cheat: state too large");

  SeesawWork w;
  w.p = &p;
  w.bob = cheater_is_bob;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  {
    const int d = w.chi_dim();
    w.chi = Vec(d);
    if (w.bob) {
      for (int m = 0; m < p.d_m; ++m)
        for (int b = 0; b < p.d_b; ++b)
          w.chi(static_cast<long>(m) * p.d_b + b) = p.psi_m0(m) * p.psi_b0(b);
    } else {
      w.chi = p.psi_a0;
    }
    for (int i = 0; i < d; ++i) w.chi(i) += 1e-2 * gauss(rng);
    w.chi.normalize();
  }
  for (int i = 1; i <= p.n; ++i)
    if (w.cheater_round(i))
      w.v.push_back(p.steps[static_cast<size_t>(i - 1)].dense());

  SeesawResult out;
  out.best = w.objective();
  int stalls = 0;
  for (int round = 1; round <= max_rounds; ++round) {
    // State update: power iteration on the quadratic form the chain induces
    // on the cheater's share of the initial state.
    for (int it = 0; it < 200; ++it) {
      Vec y = w.objective_op(w.run(w.embed(w.chi), 1, p.n));
      Vec h = w.extract(w.run_adjoint(y, p.n, 1));
      const double nrm = h.norm();
      if (nrm < 1e-14) break;
      h /= nrm;
      const double delta = (h - w.chi).norm();
      w.chi = h;
      if (delta < 1e-13) break;
    }

    for (int i = 1; i <= p.n; ++i) {
      if (!w.cheater_round(i)) continue;
      const bool odd = i % 2 == 1;
      Vec before = w.run(w.embed(w.chi), 1, i - 1);
      Vec after = w.run(before, i, i);
      Vec y = w.objective_op(w.run(after, i + 1, p.n));
      Vec z = w.run_adjoint(y, p.n, i + 1);
      const int vd = w.v_dim();
      Mat grad = Mat::Zero(vd, vd);
      if (odd) {
        for (int b = 0; b < p.d_b; ++b) {
          Eigen::Map<const Vec, 0, Eigen::InnerStride<>> phi(
              before.data() + b, vd, Eigen::InnerStride<>(p.d_b));
          Eigen::Map<const Vec, 0, Eigen::InnerStride<>> zz(
              z.data() + b, vd, Eigen::InnerStride<>(p.d_b));
          grad.noalias() += Vec(phi) * Vec(zz).transpose();
        }
      } else {
        for (int a = 0; a < p.d_a; ++a) {
          grad.noalias() +=
              before.segment(static_cast<long>(a) * vd, vd) *
              z.segment(static_cast<long>(a) * vd, vd).transpose();
        }
      }
      Eigen::BDCSVD<Mat> svd(grad,
                             Eigen::ComputeThinU | Eigen::ComputeThinV);
      w.v[static_cast<size_t>(w.own_index(i))] =
          svd.matrixV() * svd.matrixU().transpose();
    }

    const double val = w.objective();
    out.rounds_used = round;
    if (val <= out.best + 1e-12) {
      ++stalls;
    } else {
      stalls = 0;
    }
    out.best = std::max(out.best, val);
    if (stalls >= 3) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

Json mat_to_json(const Mat& m) {
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<size_t>(m.size()));
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

Mat mat_from_json(const Json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 ||
      data.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols))
    throw std::runtime_error("matrix block has inconsistent shape");
  Mat m(rows, cols);
  size_t k = 0;
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = data[k++];
  return m;
}

Json vec_to_json(const Vec& v) {
  std::vector<double> data(v.data(), v.data() + v.size());
  return Json(data);
}

Vec vec_from_json(const Json& j) {
  const auto data = j.get<std::vector<double>>();
  Vec v(static_cast<long>(data.size()));
  for (size_t i = 0; i < data.size(); ++i) v(static_cast<long>(i)) = data[i];
  return v;
}

}  // namespace

Json protocol_to_json(const Protocol& p) {
  Json j;
  j["schema"] = "wcf-protocol-1";
  j["d_a"] = p.d_a;
  j["d_m"] = p.d_m;
  j["d_b"] = p.d_b;
  j["n"] = p.n;
  j["psi_a0"] = vec_to_json(p.psi_a0);
  j["psi_m0"] = vec_to_json(p.psi_m0);
  j["psi_b0"] = vec_to_json(p.psi_b0);
  Json steps = Json::array();
  for (const auto& st : p.steps) {
    Json s;
    s["dim"] = st.dim;
    if (st.sparse) {
      Json entries = Json::array();
      for (int k = 0; k < st.sparse->outerSize(); ++k)
        for (SpMat::InnerIterator it(*st.sparse, k); it; ++it)
          entries.push_back(Json::array({it.row(), it.col(), it.value()}));
      s["sparse"] = entries;
    } else {
      Json blocks = Json::array();
      for (const auto& blk : st.blocks) {
        Json b;
        b["idx"] = blk.idx;
        b["w"] = mat_to_json(blk.w);
        blocks.push_back(std::move(b));
      }
      s["blocks"] = std::move(blocks);
    }
    steps.push_back(std::move(s));
  }
  j["steps"] = std::move(steps);
  if (p.e_a) j["e_a"] = std::vector<int>(p.e_a->begin(), p.e_a->end());
  if (p.e_b) j["e_b"] = std::vector<int>(p.e_b->begin(), p.e_b->end());
  j["pi_a1"] = mat_to_json(p.pi_a1);
  j["pi_b0"] = mat_to_json(p.pi_b0);
  return j;
}

Protocol protocol_from_json(const Json& j) {
  if (!j.is_object() || j.value("schema", "") != "wcf-protocol-1")
    throw std::runtime_error("unrecognized protocol schema");
  Protocol p;
  p.d_a = j.at("d_a").get<int>();
  p.d_m = j.at("d_m").get<int>();
  p.d_b = j.at("d_b").get<int>();
  p.n = j.at("n").get<int>();
  p.psi_a0 = vec_from_json(j.at("psi_a0"));
  p.psi_m0 = vec_from_json(j.at("psi_m0"));
  p.psi_b0 = vec_from_json(j.at("psi_b0"));
  for (const auto& s : j.at("steps")) {
    StepUnitary st;
    st.dim = s.at("dim").get<int>();
    if (s.contains("sparse")) {
      std::vector<Eigen::Triplet<double>> trips;
      for (const auto& e : s.at("sparse"))
        trips.emplace_back(e.at(0).get<long>(), e.at(1).get<long>(),
                           e.at(2).get<double>());
      SpMat sp(st.dim, st.dim);
      sp.setFromTriplets(trips.begin(), trips.end());
      st.sparse = std::move(sp);
    } else {
      for (const auto& b : s.at("blocks")) {
        BlockOp blk;
        blk.idx = b.at("idx").get<std::vector<int>>();
        blk.w = mat_from_json(b.at("w"));
        st.blocks.push_back(std::move(blk));
      }
    }
    p.steps.push_back(std::move(st));
  }
  if (j.contains("e_a")) {
    auto v = j.at("e_a").get<std::vector<int>>();
    p.e_a = std::vector<char>(v.begin(), v.end());
  }
  if (j.contains("e_b")) {
    auto v = j.at("e_b").get<std::vector<int>>();
    p.e_b = std::vector<char>(v.begin(), v.end());
  }
  p.pi_a1 = mat_from_json(j.at("pi_a1"));
  p.pi_b0 = mat_from_json(j.at("pi_b0"));
  return p;
}

Json ubp_to_json(const UBP& u) {
  Json j;
  j["schema"] = "wcf-ubp-1";
  j["protocol"] = protocol_to_json(u.proto);
  Json za = Json::array(), zb = Json::array();
  for (const auto& z : u.za) za.push_back(mat_to_json(z));
  for (const auto& z : u.zb) zb.push_back(mat_to_json(z));
  j["za"] = std::move(za);
  j["zb"] = std::move(zb);
  j["beta"] = u.beta;
  j["alpha"] = u.alpha;
  return j;
}

UBP ubp_from_json(const Json& j) {
  if (!j.is_object() || j.value("schema", "") != "wcf-ubp-1")
    throw std::runtime_error("unrecognized certificate schema");
  UBP u;
  u.proto = protocol_from_json(j.at("protocol"));
  for (const auto& z : j.at("za")) u.za.push_back(mat_from_json(z));
  for (const auto& z : j.at("zb")) u.zb.push_back(mat_from_json(z));
  u.beta = j.at("beta").get<double>();
  u.alpha = j.at("alpha").get<double>();
  return u;
}

}  // namespace wcf
