#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wcf/polynomial.hpp"
#include "wcf/rational.hpp"

namespace wcf {

using Json = nlohmann::json;

enum class Axis { horizontal, vertical };

// Finitely supported function on the half-line; no zero weights stored.
struct PointFn1D {
  std::map<Q, Q> w;

  // Accumulates weight at z (z >= 0); entries reaching zero are dropped.
  void add(const Q& z, const Q& weight);
  Q at(const Q& z) const;
  bool nonnegative() const;
  Q total() const;
  // First moment sum z * w(z).
  Q moment() const;
  bool operator==(const PointFn1D& o) const { return w == o.w; }
};

// Finitely supported function on the quarter-plane, keyed by (x, y).
struct PointFn2D {
  std::map<std::pair<Q, Q>, Q> w;

  void add(const Q& x, const Q& y, const Q& weight);
  Q at(const Q& x, const Q& y) const;
  bool nonnegative() const;
  Q total() const;
  // Horizontal: one PointFn1D in x per distinct y (key). Vertical: in y per x.
  std::map<Q, PointFn1D> lines(Axis a) const;
  PointFn2D transposed() const;
  bool operator==(const PointFn2D& o) const { return w == o.w; }
};

PointFn1D add_fn(const PointFn1D& a, const PointFn1D& b);
PointFn2D add_fn(const PointFn2D& a, const PointFn2D& b);
// Requires a > 0.
PointFn1D scale_fn(const PointFn1D& d, const Q& a);
PointFn2D scale_fn(const PointFn2D& d, const Q& a);
PointFn1D sub_fn(const PointFn1D& a, const PointFn1D& b);
PointFn2D sub_fn(const PointFn2D& a, const PointFn2D& b);

// Strictly positive weights only (checked at construction).
struct Config2D {
  PointFn2D fn;

  Config2D() = default;
  explicit Config2D(PointFn2D f);
};

struct MoveSpec {
  enum class Kind { raise, merge, split };

  Kind kind;
  // Horizontal moves act on x along the line y = line; vertical on y at x = line.
  Axis axis;
  Q line;
  // raise: whole weight at `from` moves to `to` (from <= to).
  Q from, to;
  // merge: weight p1 at z1 and p2 at z2 combine at `target`, the exact mean.
  // split: weight p1 + p2 at z leaves p1 at z1_to and p2 at z2_to, conserving
  // sum w and sum w/z (a point at z = 0 may only split into points at 0).
  Q z1, p1, z2, p2, target;
  Q z, z1_to, z2_to;

  static MoveSpec raise_move(Axis a, const Q& line, const Q& from, const Q& to);
  static MoveSpec merge_move(Axis a, const Q& line, const Q& z1, const Q& p1, const Q& z2,
                             const Q& p2, const Q& target);
  static MoveSpec split_move(Axis a, const Q& line, const Q& z, const Q& p1, const Q& p2,
                             const Q& z1_to, const Q& z2_to);
};

struct LineVerdict {
  bool accepted = false;
  bool conserved = false;
  SignVerdict sign;
  // Whether sum z * d(z) > 0; strict validity needs this on top of a strictly
  // positive numerator.
  bool mean_increases = false;
  std::string diagnostic;
};

// Decides whether d is a valid line function on (lambda0, inf). One-source and
// one-target shapes are decided by exact O(n) closed-form tests; everything
// else goes through the cleared-denominator numerator and the Sturm engine.
LineVerdict check_valid_fn_1d(const PointFn1D& d, const Q& lambda0, bool strict);

// Equivalent to check_valid_fn_1d(q - p, 0, strict); p and q must be >= 0.
LineVerdict check_transition_1d(const PointFn1D& p, const PointFn1D& q, bool strict);

struct PlaneVerdict {
  bool accepted = false;
  Axis direction = Axis::horizontal;
  // (line coordinate, diagnostic) for each failing line.
  std::vector<std::pair<Q, std::string>> line_failures;
};

PlaneVerdict check_valid_fn_2d(const PointFn2D& d, Axis direction, const Q& lambda0,
                               bool strict = false);

enum class TransitionClass { horizontal, vertical, both, neither };

struct TransitionVerdict {
  TransitionClass cls = TransitionClass::neither;
  PlaneVerdict horizontal;
  PlaneVerdict vertical;
};

TransitionVerdict check_transition_2d(const PointFn2D& p, const PointFn2D& q);

Config2D apply_move(const Config2D& c, const MoveSpec& m);

// {"points": [{"x": "a/b", ("y": "c/d",) "w": "e/f"}]}; 2-D points are sorted
// by (y, x), 1-D by x; rationals serialize reduced.
Json pointfn_to_json(const PointFn1D& d);
Json pointfn_to_json(const PointFn2D& d);
PointFn1D pointfn1d_from_json(const Json& j);
PointFn2D pointfn2d_from_json(const Json& j);

// Brute-force refutation probe: evaluates sum_z (-1/(lambda+z)) d(z) exactly on
// a deterministic grid above lambda0 plus a dyadic tail near lambda0; returns a
// lambda with a negative value if one is sampled.
std::optional<Q> sample_negative_lambda(const PointFn1D& d, const Q& lambda0,
                                        long grid_points);

}  // namespace wcf
