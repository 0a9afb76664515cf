#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wcf/games.hpp"
#include "wcf/pointfn.hpp"
#include "wcf/rational.hpp"

namespace wcf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

// One block of a step unitary: a small real orthogonal matrix on an explicit
// list of basis indices of the acting space. Entry w(r, c) is the matrix
// element between basis states idx[r] (output) and idx[c] (input).
struct BlockOp {
  std::vector<int> idx;
  Mat w;
};

// Unitary for one message round, stored over the acting space (Alice's side
// tensor the message space for odd rounds, message tensor Bob's side for even
// rounds). Either a list of disjoint blocks over an implicit identity, or an
// explicit sparse matrix when `sparse` is set.
struct StepUnitary {
  int dim = 0;
  std::vector<BlockOp> blocks;
  std::optional<SpMat> sparse;

  Vec apply(const Vec& x) const;
  Vec apply_adjoint(const Vec& x) const;
  Mat dense() const;
  SpMat to_sparse() const;
  double unitarity_error() const;
};

// Message-passing protocol on A (x) M (x) B. Basis indices of the joint space
// are laid out as (a * d_m + m) * d_b + b. Odd rounds act on A (x) M (index
// a * d_m + m), even rounds on M (x) B (index m * d_b + b). Optional
// intermediate measurements are diagonal 0/1 projectors applied by the acting
// player right after each round; honest play passes them with certainty and
// the run aborts on the complementary outcome. Final two-outcome measurements
// are given by pi_a1 on A and pi_b0 on B, with the complements implied.
struct Protocol {
  int d_a = 0, d_m = 0, d_b = 0;
  int n = 0;
  Vec psi_a0, psi_m0, psi_b0;
  std::vector<StepUnitary> steps;
  std::optional<std::vector<char>> e_a;
  std::optional<std::vector<char>> e_b;
  Mat pi_a1, pi_b0;

  long full_dim() const {
    return static_cast<long>(d_a) * d_m * d_b;
  }
  bool has_projections() const { return e_a.has_value() || e_b.has_value(); }
};

// Protocol together with certificate operator chains on A and on B and the
// claimed ceiling (beta, alpha) on the two cheating probabilities.
struct UBP {
  Protocol proto;
  std::vector<Mat> za, zb;
  double beta = 0, alpha = 0;
};

// Matrix pair witnessing one realized line transition: x and y positive
// semidefinite with y - x positive semidefinite, and the spectral weight
// distributions of psi under x and under y equal to the two endpoint line
// functions within the recorded tolerances.
struct Realization {
  Mat x, y;
  Vec psi;
  double psd_slack = 0;
  double prob_residual = 0;
};

// Finitely supported weight function with double-precision weights, sorted by
// coordinate.
struct ApproxFn1D {
  std::vector<std::pair<double, double>> pts;

  double total() const;
  double at(double z, double coord_tol) const;
};

// Spectral weight distribution of `state` under the symmetric positive
// semidefinite matrix z: eigenvalues closer than cluster_tol are grouped, each
// group contributes one point at the group mean carrying the squared norm of
// the state's projection onto the group's eigenspace. Zero-weight groups are
// kept so the support of the result always covers the clustered spectrum.
// `state` may be a unit vector or a density matrix (square, same size as z).
ApproxFn1D prob_extract(const Mat& z, const Mat& state, double cluster_tol);
ApproxFn1D prob_extract(const Mat& z, const Vec& state, double cluster_tol);

struct RealizeOptions {
  double lambda = 0;          // 0 means choose 4 * max(S) automatically
  int lambda_doublings = 10;  // extra attempts with doubled lambda
  double psd_tol_scale = 1e-8;
  double state_tol = 1e-9;
  bool allow_numeric = true;
  unsigned long seed = 20260823;
  int restarts = 8;
  int max_iters = 400;
};

enum class RealizeBranch { identity, relocation, merge, split, numeric };

struct RealizeOutcome {
  bool ok = false;
  RealizeBranch branch = RealizeBranch::identity;
  // Realized unitary over the level space {|f, k> : f in {0,1}, k < |S|},
  // with basis index f * |S| + k; identity outside the block.
  BlockOp u;
  Realization cert;
  double lambda = 0;
  std::string message;
};

// Builds a unitary u on the 2|S|-level space carrying the square-root vector
// of q to the square-root vector of p while keeping
// diag(S) + lambda * P1 - u^T diag(S) u positive semidefinite, where diag(S)
// puts S[k] on level (0, k) and P1 projects onto the levels (1, k). Requires
// p -> q strictly valid (verified exactly first) and both supports contained
// in S. Single full-weight relocations, two-point merges strictly above the
// source mean, and two-point straddling splits are built in closed form;
// every other shape goes through a seeded numeric search over the orthogonal
// group, and non-convergence is reported in `message` with the residuals,
// with ok == false.
RealizeOutcome realize_transition(const PointFn1D& p, const PointFn1D& q,
                                  const std::vector<Q>& s,
                                  const RealizeOptions& opt = {});

struct ConstraintSlack {
  std::string name;
  double slack = 0;
  double tol = 0;
  bool ok = false;
  bool certified_only = false;  // slack is a certified bound, not an estimate
};

struct UBPReport {
  bool accepted = false;
  std::vector<ConstraintSlack> items;
  std::vector<std::pair<std::string, std::string>> failures;
};

struct VerifyOptions {
  double ineq_tol_scale = 1e-8;   // slack floor is -scale * (1 + |Z|)
  double eigvec_tol = 1e-9;
  double unitary_tol = 1e-10;
  double agree_tol = 1e-9;
  long dense_cap = 2000;          // largest acting dimension checked densely
};

// Checks every defining condition of the certificate chain: endpoint
// eigenvector equations, the between-round ordering inequalities on the
// acting player's side (with the measurement sandwich when projections are
// present), equality of the idle player's chain, terminal operators matching
// the final measurements, positive semidefiniteness, unitarity, and the final
// agreement condition. Small systems use dense eigensolvers; large sparse
// systems use a shifted factorization certificate with an iterative
// eigenvalue estimate for reporting.
UBPReport verify_ubp(const UBP& u, const VerifyOptions& opt = {});

struct HonestRun {
  std::vector<Vec> psi;          // states after 0..n rounds
  std::vector<double> proj_fail; // per-round excluded-outcome probability
  double pa = 0, pb = 0;
  double agree_residual = 0;
};

// Runs the protocol with both players honest, applying each round's unitary
// and projection in turn, and reads the final outcome distribution.
// Projection failures beyond 1e-9 per round throw.
HonestRun honest_run(const Protocol& p);

struct CompiledFrameCheck {
  int frame = 0;
  double max_weight_error = 0;
};

struct CompileResult {
  UBP ubp;
  UBPReport report;
  double lambda = 0;
  // Per-frame worst deviation between the game's weights and the squared
  // honest amplitudes of the matching protocol state.
  std::vector<CompiledFrameCheck> frame_checks;
  std::vector<double> proj_fail;
  double pa = 0, pb = 0;
  // Coordinate sets of the two sides, ascending.
  std::vector<Q> s_a, s_b;
};

struct CompileOptions {
  RealizeOptions realize;
  VerifyOptions verify;
  double frame_tol = 1e-8;
  bool run_verify = true;
};

// Turns a game whose nonzero transitions are strictly valid and alternate
// vertical-first / horizontal-last into a protocol with projections plus a
// matching certificate chain whose ceiling is the game's final point. Every
// nonzero line of every transition is realized through realize_transition;
// failures carry a frame and line locator. The honest run of the result
// reproduces the game frame by frame.
CompileResult compile_tdpg(const TDPG& g, const CompileOptions& opt = {});

struct UbpToTdpgResult {
  TDPG game;
  bool accepted = false;
  // Transition indices whose tolerant validity check failed, with reasons.
  std::vector<std::pair<std::string, std::string>> failures;
  // Eigenvalue gaps that fell near the clustering threshold.
  std::vector<std::string> cluster_notes;
};

struct UbpToTdpgOptions {
  double cluster_tol = 1e-7;
  unsigned long den_bound = 1000000;
  double slack = 1e-6;
  VerifyOptions verify;
  bool run_verify = true;
};

// Reads the movie of the certificate chain along the honest run, in reverse
// time: frame j is the joint spectral weight distribution of the pair
// (za[n-j], zb[n-j]) on the honest state after n-j rounds. Weights and
// coordinates are rationalized with a bounded denominator and every frame
// difference is checked for validity with a small polynomial slack.
UbpToTdpgResult ubp_to_tdpg(const UBP& u, const UbpToTdpgOptions& opt = {});

struct ProjectionsResult {
  UBP ubp;
  bool ok = false;
  std::string message;
  std::vector<double> lambda_ladder_a, lambda_ladder_b;
};

struct ProjectionsOptions {
  double eps = 1e-3;
  int lambda_doublings = 10;
  double ineq_tol_scale = 1e-8;
};

// Removes the intermediate measurements by storing their outcomes in one
// fresh qubit per measuring round on the measuring player's side, at the
// price of raising the ceiling by n * eps on both coordinates. The honest
// outcome is unchanged. The per-round ladder constants are grown by doubling
// until the transformed ordering constraints verify, up to a cap; running out
// of doublings reports failure with the offending round.
ProjectionsResult projections_to_unitary(const UBP& u,
                                         const ProjectionsOptions& opt = {});

struct SeesawResult {
  double best = 0;
  int rounds_used = 0;
};

// Alternating-maximization heuristic for the named player's cheating
// probability against an honest opponent: the cheater's share of the initial
// state and their round unitaries are optimized one at a time (top eigenvector
// for the state, polar update for each unitary) until the objective stalls.
// Intermediate measurements on the honest side discard the failing branch.
// The value is a lower bound on the true cheating probability, so it must
// stay below the corresponding certificate ceiling.
SeesawResult seesaw_cheat(const Protocol& p, bool cheater_is_bob,
                          int max_rounds = 40, unsigned long seed = 1);

// Joint spectral weights of (za on A, zb on B) over a state of the full
// space, clustered like prob_extract; used for game frame recovery.
PointFn2D joint_prob_rationalized(const Mat& za, const Mat& zb, const Vec& psi,
                                  int d_a, int d_m, int d_b, double cluster_tol,
                                  unsigned long den_bound);

// Serialization: schema-versioned JSON, block matrices row-major.
Json protocol_to_json(const Protocol& p);
Protocol protocol_from_json(const Json& j);
Json ubp_to_json(const UBP& u);
UBP ubp_from_json(const Json& j);

}  // namespace wcf
