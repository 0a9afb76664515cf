#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wcf/compiler.hpp"

namespace wcf::detail {

// Applies one round to a full-space state. `odd` selects the acting side.
Vec apply_step_full(const StepUnitary& u, bool odd, const Vec& psi, int d_a,
                    int d_m, int d_b);

Vec apply_step_full_adjoint(const StepUnitary& u, bool odd, const Vec& psi,
                            int d_a, int d_m, int d_b);

struct DualSlack {
  double slack = 0;
  bool ok = false;
  bool certified_only = false;
  std::string diag;
};

// Minimum-eigenvalue decision for lhs (x) I - U^T E (mid (x) I) E U on the
// acting side, choosing a block, dense, or sparse path automatically.
DualSlack dual_constraint_slack(const StepUnitary& st, const Mat& lhs,
                                const Mat& mid, const std::vector<char>* e,
                                bool odd, int d_a, int d_m, int d_b,
                                long dense_cap, double tol);

// Multiplies by a diagonal 0/1 projector on the acting space and returns the
// removed squared mass.
double apply_diag_proj_full(const std::vector<char>& keep, bool odd, Vec& psi,
                            int d_a, int d_m, int d_b);

Mat kron_dense(const Mat& a, const Mat& b);
Vec kron_vec(const Vec& a, const Vec& b);

// Largest absolute off-diagonal entry.
double max_offdiag(const Mat& m);

// Minimum eigenvalue by dense symmetric solve.
double dense_min_eig(const Mat& m);

struct MinEigCheck {
  bool ok = false;
  bool certified_only = false;
  double slack = 0;
};

// Decides lambda_min(d) >= -tol for a sparse symmetric matrix: first a shifted
// LDLT factorization certificate, then an iterative estimate for reporting.
MinEigCheck sparse_min_eig_check(const SpMat& d, double tol);

// Smallest Ritz value of a symmetric operator given by matvec, with full
// reorthogonalization and a deterministic seeded start.
double lanczos_min_eig(const std::function<Vec(const Vec&)>& matvec, int dim,
                       int max_iters, unsigned long seed);

// Index of an exact coordinate in an ascending list; -1 when absent.
int coord_index(const std::vector<Q>& s, const Q& v);

// Honest amplitudes of a compiled protocol tracked on the matched-register
// subspace, amp(ka, kb) for the state |0,ka>|ka,kb>|kb,0>.
struct CompressedHonest {
  Mat amp;
  std::vector<double> proj_fail;
};

}  // namespace wcf::detail
