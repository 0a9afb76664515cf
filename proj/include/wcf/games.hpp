#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wcf/pointfn.hpp"

namespace wcf {

// Frames run in reverse time: frame 0 is the final-coin distribution
// pb[1,0] + pa[0,1], the last frame concentrates on a single point.
struct TDPG {
  std::vector<Config2D> frames;
  Q pa, pb;
};

struct TIPG {
  PointFn2D h, v;
  Q pa, pb;
};

struct GameReport {
  bool accepted = false;
  // (beta, alpha): weight-1 end point of the game.
  std::optional<std::pair<Q, Q>> final_point;
  // (locator, diagnostic) pairs.
  std::vector<std::pair<std::string, std::string>> failures;

  // max(beta, alpha) - 1/2; requires a final point.
  Q bias() const;
};

// Checks boundary frames, per-frame conservation, and that each consecutive
// transition is valid horizontally or vertically. With general_start the
// first frame may be any distribution summing to 1.
GameReport verify_tdpg(const TDPG& g, bool general_start = false);

// Checks h horizontally valid, v vertically valid, and
// h + v = 1[beta,alpha] - pb[1,0] - pa[0,1].
GameReport verify_tipg(const TIPG& t);

// Differences consecutive frames and accumulates them by transition
// direction; the result has the same final point.
TIPG tdpg_to_tipg(const TDPG& g);

// Rebuilds an explicit TDPG from a TIPG; the final point exceeds the TIPG's
// by at most eps per coordinate (often exact). Uses the catalyst r = v^-:
// builds it from scaled start mass (with junk r'), runs repeated scaled
// (vertical, horizontal) applications of (v, h), then removes leftovers with
// a raise, merge, merge ending. Small instances use equal repetitions of
// weight delta/c; larger ones interleave fractional line applications so the
// repetition count stays bounded.
TDPG tipg_to_tdpg(const TIPG& t, const Q& eps);

// Shifts frame i by (floor(i/2), ceil(i/2)) * eps/n after padding the
// transition list to alternate vertical-first; every nonzero line transition
// of the result is strictly valid and the final point moves by (eps/2, eps/2).
TDPG strictify_tdpg(const TDPG& g, const Q& eps);

Json tdpg_to_json(const TDPG& g);
TDPG tdpg_from_json(const Json& j);
Json tipg_to_json(const TIPG& t);
TIPG tipg_from_json(const Json& j);

}  // namespace wcf
