#include "wcf/games.hpp"

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wcf/rational.hpp"

namespace wcf {

namespace {

PointFn2D start_fn(const Q& pa, const Q& pb) {
  PointFn2D p;
  if (pb > 0) p.add(1, 0, pb);
  if (pa > 0) p.add(0, 1, pa);
  return p;
}

std::string first_failure(const GameReport& rep) {
  if (rep.failures.empty()) return "unknown failure";
  return rep.failures.front().first + ": " + rep.failures.front().second;
}

std::string transition_diag(const TransitionVerdict& tv) {
  std::string s = "not a valid move in either direction";
  if (!tv.horizontal.line_failures.empty()) {
    const auto& lf = tv.horizontal.line_failures.front();
    s += "; horizontal line y = " + q_str(lf.first) + ": " + lf.second;
  }
  if (!tv.vertical.line_failures.empty()) {
    const auto& lf = tv.vertical.line_failures.front();
    s += "; vertical line x = " + q_str(lf.first) + ": " + lf.second;
  }
  return s;
}

// Rounds a positive rational down to a multiple of 2^-128 so that repeated
// sweep fractions cannot let denominators grow without bound.
Q dyadic_floor(const Q& x) {
  static const Z one_shifted = Z(1) << 128;
  Z num = x.get_num() * one_shifted;
  Z d;
  mpz_fdiv_q(d.get_mpz_t(), num.get_mpz_t(), x.get_den().get_mpz_t());
  Q r(d);
  r /= Q(one_shifted);
  return r;
}

// Rounds a positive rational up to a multiple of 2^-128.
Q dyadic_ceil(const Q& x) {
  static const Z one_shifted = Z(1) << 128;
  Z num = x.get_num() * one_shifted;
  Z d;
  mpz_cdiv_q(d.get_mpz_t(), num.get_mpz_t(), x.get_den().get_mpz_t());
  Q r(d);
  r /= Q(one_shifted);
  return r;
}

void push_frame(std::vector<Config2D>& frames, PointFn2D& cur, const PointFn2D& next) {
  if (next == cur) return;
  frames.emplace_back(next);
  cur = next;
}

void shift_mass(std::vector<Config2D>& frames, PointFn2D& cur, const Q& m, const Q& x0,
                const Q& y0, const Q& x1, const Q& y1) {
  if (m == 0 || (x0 == x1 && y0 == y1)) return;
  PointFn2D next = cur;
  next.add(x0, y0, -m);
  next.add(x1, y1, m);
  push_frame(frames, cur, next);
}

// Folds everything outside (beta, alpha) into a single final point. Debris
// under the main point on its own column is raised straight onto it. The
// rest is raised to the top debris row, merged there at the exact mean
// against an anvil slice of the main mass, and the resulting column is
// merged once more. The final point exceeds (beta, alpha) by at most eps
// in each coordinate or the cleanup refuses.
std::pair<Q, Q> finish_with_cleanup(PointFn2D cur, std::vector<Config2D>& frames,
                                    const Q& beta, const Q& alpha, const Q& eps) {
  {
    PointFn2D next = cur;
    Q gathered = 0;
    for (const auto& [pt, w] : cur.w) {
      if (pt.first == beta && pt.second < alpha) {
        next.add(beta, pt.second, -w);
        gathered += w;
      }
    }
    if (gathered > 0) {
      next.add(beta, alpha, gathered);
      push_frame(frames, cur, next);
    }
  }
  Q dd = 0, sx = 0, yt = alpha;
  for (const auto& [pt, w] : cur.w) {
    if (pt.first == beta && pt.second == alpha) continue;
    dd += w;
    sx += w * (pt.first - beta);
    if (pt.second > yt) yt = pt.second;
  }
  if (dd == 0) return {beta, alpha};
  Q sxp = sx > 0 ? sx : Q(0);
  if (yt == alpha) {
    if (sxp > eps) throw std::logic_error("cleanup: debris exceeds the eps budget");
    {
      PointFn2D next;
      for (const auto& [pt, w] : cur.w) next.add(pt.first, alpha, w);
      push_frame(frames, cur, next);
    }
    Q xf = beta + sxp;
    PointFn2D next;
    next.add(xf, alpha, 1);
    push_frame(frames, cur, next);
    return {xf, alpha};
  }
  Q dp = dd;
  if (sxp > eps * dp) dp = sxp / eps;
  if (dp * (yt - alpha) > eps || dp >= 1)
    throw std::logic_error("cleanup: debris exceeds the eps budget");
  {
    PointFn2D next;
    for (const auto& [pt, w] : cur.w) {
      if (pt.first == beta && pt.second == alpha)
        next.add(pt.first, pt.second, w);
      else
        next.add(pt.first, yt, w);
    }
    if (dp > dd) {
      next.add(beta, alpha, -(dp - dd));
      next.add(beta, yt, dp - dd);
    }
    push_frame(frames, cur, next);
  }
  Q xf = beta;
  if (sxp > 0) xf += sxp / dp;
  {
    PointFn2D next;
    next.add(xf, yt, dp);
    next.add(xf, alpha, Q(1) - dp);
    push_frame(frames, cur, next);
  }
  Q yf = alpha + dp * (yt - alpha);
  {
    PointFn2D next;
    next.add(xf, yf, 1);
    push_frame(frames, cur, next);
  }
  return {xf, yf};
}

// Moves mass sq from the start corner to (x, y) through raises, using a
// split through (2 - x) or (2 - y) when the target lies below 1 on both
// axes. Junk mass stays where the chain drops it.
void create_point(std::vector<Config2D>& frames, PointFn2D& cur, const Q& x, const Q& y,
                  const Q& sq) {
  if (x >= 1) {
    if (y > 0) shift_mass(frames, cur, sq, 1, 0, 1, y);
    if (x > 1) shift_mass(frames, cur, sq, 1, y, x, y);
  } else if (y >= 1) {
    if (x > 0) shift_mass(frames, cur, sq, 0, 1, x, 1);
    if (y > 1) shift_mass(frames, cur, sq, x, 1, x, y);
  } else if (x > 0) {
    Q m = 2 * sq / x;
    if (y > 0) shift_mass(frames, cur, m, 1, 0, 1, y);
    PointFn2D next = cur;
    next.add(1, y, -m);
    next.add(x, y, sq);
    next.add(2 - x, y, m - sq);
    push_frame(frames, cur, next);
  } else if (y > 0) {
    Q m = 2 * sq / y;
    PointFn2D next = cur;
    next.add(0, 1, -m);
    next.add(0, y, sq);
    next.add(0, 2 - y, m - sq);
    push_frame(frames, cur, next);
  }
}

// Builds the catalyst r = v^- at scale delta/c, applies (v, h) in equal
// repetitions of weight delta/c (last one truncated), and cleans up the
// leftover delta of scattered mass. Returns nothing when the repetition
// count would exceed max_reps.
std::optional<TDPG> canonical_convert(const TIPG& t, const Q& eps, const Q& beta,
                                      const Q& alpha, const PointFn2D& p0,
                                      const PointFn2D& vneg, long max_reps) {
  Q c = 0;
  Q xdeb = 1, ydeb = 1;
  for (const auto& [pt, qw] : vneg.w) {
    const Q& x = pt.first;
    const Q& y = pt.second;
    if (x > xdeb) xdeb = x;
    if (y > ydeb) ydeb = y;
    if (x >= 1) {
      c += qw / t.pb;
    } else if (y >= 1) {
      c += qw / t.pa;
    } else if (x > 0) {
      c += 2 * qw / (x * t.pb);
      if (2 - x > xdeb) xdeb = 2 - x;
    } else {
      c += 2 * qw / (y * t.pa);
      if (2 - y > ydeb) ydeb = 2 - y;
    }
  }
  Q xt = xdeb, yt = ydeb;
  if (beta + 2 * eps > xt) xt = beta + 2 * eps;
  if (alpha + 2 * eps > yt) yt = alpha + 2 * eps;
  Q delta = eps * eps / ((xt - beta) * (yt - alpha));
  Q s = delta / c;
  Z nfull = q_floor((Q(1) - delta) / s);
  if (nfull > max_reps) return std::nullopt;
  long nf = nfull.get_si();
  Q rem = (Q(1) - delta) - Q(nfull) * s;

  PointFn2D cur = p0;
  std::vector<Config2D> frames;
  frames.emplace_back(cur);
  for (const auto& [pt, qw] : vneg.w) create_point(frames, cur, pt.first, pt.second, s * qw);
  auto apply_scaled = [&](const PointFn2D& f, const Q& a) {
    if (f.w.empty() || a == 0) return;
    PointFn2D next = cur;
    for (const auto& [pt, w] : f.w) next.add(pt.first, pt.second, a * w);
    push_frame(frames, cur, next);
  };
  for (long k = 0; k < nf; ++k) {
    apply_scaled(t.v, s);
    apply_scaled(t.h, s);
  }
  if (rem > 0) {
    apply_scaled(t.v, rem);
    apply_scaled(t.h, rem);
  }
  finish_with_cleanup(cur, frames, beta, alpha, eps);
  return TDPG{std::move(frames), t.pa, t.pb};
}

// One interior point the vertical phase consumes, together with the route
// that plants its opening stock from the start corners.
struct Seed {
  Q x, y;
  Q weight;    // vertical draw per unit of line fraction
  Q sigma;     // planted mass, two sweeps of draw at the chosen rate
  Q take_b;    // mass taken from (1, 0), split overhead included
  Q take_a;    // mass taken from (0, 1)
  Q junk_x, junk_y, junk_m;  // split leftover and where it lands
};

// Predicts the debris the sweeps leave behind at rate r: seed stock, split
// leftovers and the slice of start mass the lines never collect. Entries on
// the final column at or below alpha are not counted because the cleanup
// absorbs them without moving the final point.
struct SweepPlan {
  std::vector<Seed> seeds;
  Q eta = 0;   // lines run to total fraction 1 - eta
  Q draw_b = 0, draw_a = 0;
  Q sx = 0;    // debris moment around the final column
  Q dmass = 0;
  Q ytop;      // highest debris row, at least alpha
};

SweepPlan plan_sweep(const TIPG& t, const Q& beta, const Q& alpha, const Q& r) {
  SweepPlan p;
  p.ytop = alpha;
  for (const auto& [pt, w] : t.v.w) {
    if (w >= 0) continue;
    if ((pt.first == 1 && pt.second == 0) || (pt.first == 0 && pt.second == 1)) continue;
    Seed s;
    s.x = pt.first;
    s.y = pt.second;
    s.weight = -w;
    s.sigma = dyadic_ceil(2 * r * s.weight);
    s.take_b = s.take_a = s.junk_x = s.junk_y = s.junk_m = 0;
    if (s.x >= 1) {
      s.take_b = s.sigma;
    } else if (s.y >= 1) {
      s.take_a = s.sigma;
    } else {
      s.take_b = 2 * s.sigma / s.x;
      s.junk_m = s.take_b - s.sigma;
      s.junk_x = 2 - s.x;
      s.junk_y = s.y;
    }
    p.seeds.push_back(std::move(s));
  }
  for (const auto& s : p.seeds) {
    p.draw_b += s.take_b;
    p.draw_a += s.take_a;
  }
  p.eta = p.draw_b / t.pb;
  if (p.draw_a / t.pa > p.eta) p.eta = p.draw_a / t.pa;
  std::vector<std::tuple<Q, Q, Q>> bits;
  for (const auto& s : p.seeds) {
    bits.emplace_back(s.x, s.y, s.sigma);
    if (s.junk_m > 0) bits.emplace_back(s.junk_x, s.junk_y, s.junk_m);
  }
  bits.emplace_back(1, 0, t.pb * p.eta - p.draw_b);
  bits.emplace_back(0, 1, t.pa * p.eta - p.draw_a);
  for (const auto& [x, y, m] : bits) {
    if (m == 0) continue;
    if (x == beta && y <= alpha) continue;
    p.sx += m * (x - beta);
    p.dmass += m;
    if (y > p.ytop) p.ytop = y;
  }
  return p;
}

struct SweepLine {
  Q key;
  PointFn1D fn;
  Q frac;
};

std::vector<SweepLine> make_lines(const PointFn2D& f, Axis a) {
  std::vector<SweepLine> ls;
  for (auto& [key, fn] : f.lines(a)) ls.push_back({key, std::move(fn), Q(0)});
  return ls;
}

// Advances each line of one axis by up to rcap of its fraction, limited by
// the mass currently at its negative points. Emits one transition frame.
bool advance_lines(std::vector<SweepLine>& lines, Axis phase, const Q& target, const Q& rcap,
                   PointFn2D& cur, std::vector<Config2D>& frames) {
  PointFn2D next = cur;
  bool moved = false;
  for (auto& L : lines) {
    if (L.frac >= target) continue;
    Q da = target - L.frac;
    if (da > rcap) da = rcap;
    bool capped = false;
    for (const auto& [z, w] : L.fn.w) {
      if (w >= 0) continue;
      Q have = phase == Axis::vertical ? cur.at(L.key, z) : cur.at(z, L.key);
      Q lim = have / -w;
      if (lim < da) {
        da = lim;
        capped = true;
      }
    }
    if (capped) da = dyadic_floor(da);
    if (da <= 0) continue;
    for (const auto& [z, w] : L.fn.w) {
      if (phase == Axis::vertical)
        next.add(L.key, z, da * w);
      else
        next.add(z, L.key, da * w);
    }
    L.frac += da;
    moved = true;
  }
  push_frame(frames, cur, next);
  return moved;
}

bool all_reached(const std::vector<SweepLine>& vl, const std::vector<SweepLine>& hl,
                 const Q& target) {
  for (const auto& L : vl)
    if (L.frac < target) return false;
  for (const auto& L : hl)
    if (L.frac < target) return false;
  return true;
}

// Two-stage sweep conversion. First a greedy full-rate cascade: with no
// seeds planted, lines advance as far as present mass allows each sweep;
// games whose feeding order has no cycles finish exactly within a few
// sweeps and leave no debris. When the cascade stalls, interior points the
// vertical phase consumes get seed stock for two sweeps of a fixed dyadic
// rate, after which the horizontal phase of each sweep deposits exactly
// what the next vertical phase draws. All lines then stay in lockstep to a
// common target fraction and the cleanup folds seeds, split leftovers and
// start remainders into the final point. Returns nothing when no sweep
// rate fits both the debris budget and the frame budget.
std::optional<TDPG> sweep_convert(const TIPG& t, const Q& eps, const Q& beta, const Q& alpha,
                                  const PointFn2D& p0, std::string* diag) {
  {
    std::vector<SweepLine> vl = make_lines(t.v, Axis::vertical);
    std::vector<SweepLine> hl = make_lines(t.h, Axis::horizontal);
    PointFn2D cur = p0;
    std::vector<Config2D> frames;
    frames.emplace_back(cur);
    for (int sweep = 0; sweep < 64; ++sweep) {
      bool mv = advance_lines(vl, Axis::vertical, Q(1), Q(1), cur, frames);
      bool mh = advance_lines(hl, Axis::horizontal, Q(1), Q(1), cur, frames);
      if (all_reached(vl, hl, Q(1))) {
        finish_with_cleanup(cur, frames, beta, alpha, eps);
        return TDPG{std::move(frames), t.pa, t.pb};
      }
      if (!mv && !mh) break;
    }
  }
  Q em = eps * q(63, 64);
  auto fits_budget = [&](const SweepPlan& p) {
    if (p.eta > q(1, 4)) return false;
    Q sxp = p.sx > 0 ? p.sx : Q(0);
    if (p.ytop == alpha) return sxp <= em;
    Q dp = p.dmass;
    if (sxp > em * dp) dp = sxp / em;
    return dp * (p.ytop - alpha) <= em;
  };
  Q r = q(1, 16);
  SweepPlan plan = plan_sweep(t, beta, alpha, r);
  for (int halvings = 0; !fits_budget(plan); ++halvings) {
    if (halvings > 360) {
      if (diag) *diag = "no sweep rate fits the debris budget";
      return std::nullopt;
    }
    r /= 2;
    plan = plan_sweep(t, beta, alpha, r);
  }
  for (int i = 0; i < 8; ++i) {
    Q rr = dyadic_floor(r * q(3, 2));
    if (rr <= r || rr > q(1, 16)) break;
    SweepPlan pp = plan_sweep(t, beta, alpha, rr);
    if (!fits_budget(pp)) break;
    r = rr;
    plan = std::move(pp);
  }
  Q target = Q(1) - plan.eta;
  Z nsweep = q_ceil(target / r);
  // after a whole sweep the interior deposits cancel, so frames alternate
  // between the support of v plus seeds and a near-empty configuration
  long support = static_cast<long>(t.h.w.size() > t.v.w.size() ? t.h.w.size() : t.v.w.size()) +
                 2 * static_cast<long>(plan.seeds.size()) + 8;
  long cap = 16000;
  if (4000000 / support < cap) cap = 4000000 / support;
  if (nsweep > cap) {
    if (diag) {
      std::ostringstream os;
      os << "the sweep schedule needs about " << nsweep.get_str()
         << " rounds and the frame budget allows " << cap;
      *diag = os.str();
    }
    return std::nullopt;
  }

  PointFn2D cur = p0;
  std::vector<Config2D> frames;
  frames.emplace_back(cur);
  if (!plan.seeds.empty()) {
    PointFn2D next = cur;
    for (const auto& s : plan.seeds) {
      if (s.take_b > 0 && s.y > 0) {
        next.add(1, 0, -s.take_b);
        next.add(1, s.y, s.take_b);
      }
    }
    push_frame(frames, cur, next);
    next = cur;
    for (const auto& s : plan.seeds) {
      if (s.x > 1) {
        next.add(1, s.y, -s.sigma);
        next.add(s.x, s.y, s.sigma);
      } else if (s.x < 1 && s.y >= 1) {
        next.add(0, 1, -s.sigma);
        next.add(s.x, 1, s.sigma);
      } else if (s.x < 1) {
        next.add(1, s.y, -s.take_b);
        next.add(s.x, s.y, s.sigma);
        next.add(s.junk_x, s.junk_y, s.junk_m);
      }
    }
    push_frame(frames, cur, next);
    next = cur;
    for (const auto& s : plan.seeds) {
      if (s.x < 1 && s.y > 1) {
        next.add(s.x, 1, -s.sigma);
        next.add(s.x, s.y, s.sigma);
      }
    }
    push_frame(frames, cur, next);
  }

  std::vector<SweepLine> vlines = make_lines(t.v, Axis::vertical);
  std::vector<SweepLine> hlines = make_lines(t.h, Axis::horizontal);

  long sweeps = 0;
  while (!all_reached(vlines, hlines, target)) {
    if (++sweeps > cap + 4) {
      if (diag) *diag = "the sweep schedule stalled before reaching the target fraction";
      return std::nullopt;
    }
    advance_lines(vlines, Axis::vertical, target, r, cur, frames);
    advance_lines(hlines, Axis::horizontal, target, r, cur, frames);
  }
  finish_with_cleanup(cur, frames, beta, alpha, eps);
  return TDPG{std::move(frames), t.pa, t.pb};
}

}  // namespace

Q GameReport::bias() const {
  if (!final_point) throw std::logic_error("bias: report carries no final point");
  Q m = final_point->first;
  if (final_point->second > m) m = final_point->second;
  return m - q(1, 2);
}

GameReport verify_tdpg(const TDPG& g, bool general_start) {
  GameReport rep;
  auto fail = [&](const std::string& where, const std::string& what) {
    rep.failures.emplace_back(where, what);
  };
  if (g.pa < 0 || g.pb < 0 || g.pa + g.pb != 1)
    fail("honest split", "pa and pb must be nonnegative and sum to 1");
  if (g.frames.empty()) {
    fail("frames", "game has no frames");
    return rep;
  }
  if (!general_start && !(g.frames.front().fn == start_fn(g.pa, g.pb)))
    fail("frame 0", "start must be pb[1,0] + pa[0,1]");
  for (size_t i = 0; i < g.frames.size(); ++i) {
    Q tot = g.frames[i].fn.total();
    if (tot != 1)
      fail("frame " + std::to_string(i), "total weight " + q_str(tot) + " instead of 1");
  }
  const PointFn2D& last = g.frames.back().fn;
  if (last.w.size() == 1 && last.w.begin()->second == 1)
    rep.final_point = last.w.begin()->first;
  else
    fail("final frame", "must carry weight 1 on a single point");
  for (size_t i = 1; i < g.frames.size(); ++i) {
    TransitionVerdict tv = check_transition_2d(g.frames[i - 1].fn, g.frames[i].fn);
    if (tv.cls == TransitionClass::neither)
      fail("transition " + std::to_string(i), transition_diag(tv));
  }
  rep.accepted = rep.failures.empty();
  return rep;
}

GameReport verify_tipg(const TIPG& t) {
  GameReport rep;
  auto fail = [&](const std::string& where, const std::string& what) {
    rep.failures.emplace_back(where, what);
  };
  if (t.pa < 0 || t.pb < 0 || t.pa + t.pb != 1)
    fail("honest split", "pa and pb must be nonnegative and sum to 1");
  PlaneVerdict ph = check_valid_fn_2d(t.h, Axis::horizontal, 0);
  for (const auto& [line, diag] : ph.line_failures)
    fail("h: line y = " + q_str(line), diag);
  PlaneVerdict pv = check_valid_fn_2d(t.v, Axis::vertical, 0);
  for (const auto& [line, diag] : pv.line_failures)
    fail("v: line x = " + q_str(line), diag);
  PointFn2D tot = add_fn(add_fn(t.h, t.v), start_fn(t.pa, t.pb));
  if (tot.w.size() == 1 && tot.w.begin()->second == 1)
    rep.final_point = tot.w.begin()->first;
  else
    fail("h + v", "h + v + pb[1,0] + pa[0,1] must be a single point of weight 1");
  rep.accepted = rep.failures.empty();
  return rep;
}

TIPG tdpg_to_tipg(const TDPG& g) {
  GameReport rep = verify_tdpg(g);
  if (!rep.accepted)
    throw std::invalid_argument("tdpg_to_tipg: input rejected at " + first_failure(rep));
  TIPG t;
  t.pa = g.pa;
  t.pb = g.pb;
  for (size_t i = 1; i < g.frames.size(); ++i) {
    PointFn2D d = sub_fn(g.frames[i].fn, g.frames[i - 1].fn);
    if (d.w.empty()) continue;
    TransitionVerdict tv = check_transition_2d(g.frames[i - 1].fn, g.frames[i].fn);
    if (tv.cls == TransitionClass::vertical)
      t.v = add_fn(t.v, d);
    else
      t.h = add_fn(t.h, d);
  }
  return t;
}

TDPG tipg_to_tdpg(const TIPG& t, const Q& eps) {
  if (eps <= 0) throw std::invalid_argument("tipg_to_tdpg: eps must be positive");
  GameReport rep = verify_tipg(t);
  if (!rep.accepted)
    throw std::invalid_argument("tipg_to_tdpg: input rejected at " + first_failure(rep));
  if (t.h.at(0, 0) != 0 || t.v.at(0, 0) != 0)
    throw std::invalid_argument("tipg_to_tdpg: h and v must vanish at the origin");
  Q beta = rep.final_point->first;
  Q alpha = rep.final_point->second;
  PointFn2D p0 = start_fn(t.pa, t.pb);
  PointFn2D vneg;
  for (const auto& [pt, w] : t.v.w)
    if (w < 0) vneg.add(pt.first, pt.second, -w);
  if (vneg.w.empty()) {
    std::vector<Config2D> frames;
    frames.emplace_back(p0);
    if (!t.h.w.empty()) frames.emplace_back(add_fn(p0, t.h));
    return TDPG{std::move(frames), t.pa, t.pb};
  }
  if (t.pa <= 0 || t.pb <= 0)
    throw std::invalid_argument("tipg_to_tdpg: a catalyst needs pa > 0 and pb > 0");
  if (auto g = canonical_convert(t, eps, beta, alpha, p0, vneg, 3000)) return *g;
  std::string diag;
  if (auto g = sweep_convert(t, eps, beta, alpha, p0, &diag)) return *g;
  std::string msg = "tipg_to_tdpg: conversion exceeded the construction budget";
  if (!diag.empty()) msg += " (" + diag + ")";
  throw std::runtime_error(msg);
}

TDPG strictify_tdpg(const TDPG& g, const Q& eps) {
  if (eps <= 0) throw std::invalid_argument("strictify_tdpg: eps must be positive");
  GameReport rep = verify_tdpg(g);
  if (!rep.accepted)
    throw std::invalid_argument("strictify_tdpg: input rejected at " + first_failure(rep));
  std::vector<PointFn2D> fr;
  fr.push_back(g.frames.front().fn);
  bool expect_vertical = true;
  for (size_t i = 1; i < g.frames.size(); ++i) {
    const PointFn2D& next = g.frames[i].fn;
    PointFn2D d = sub_fn(next, fr.back());
    if (d.w.empty()) continue;
    TransitionVerdict tv = check_transition_2d(fr.back(), next);
    bool is_vertical = tv.cls == TransitionClass::both
                           ? expect_vertical
                           : tv.cls == TransitionClass::vertical;
    if (is_vertical != expect_vertical) {
      fr.push_back(fr.back());
      expect_vertical = !expect_vertical;
    }
    fr.push_back(next);
    expect_vertical = !expect_vertical;
  }
  while (fr.size() < 3 || (fr.size() - 1) % 2 != 0) fr.push_back(fr.back());
  size_t n = fr.size() - 1;
  Q step = eps / Q(static_cast<long>(n));
  std::vector<Config2D> out;
  for (size_t i = 0; i <= n; ++i) {
    Q ax = Q(static_cast<long>(i / 2)) * step;
    Q ay = Q(static_cast<long>((i + 1) / 2)) * step;
    PointFn2D s;
    for (const auto& [pt, w] : fr[i].w) s.add(pt.first + ax, pt.second + ay, w);
    out.emplace_back(std::move(s));
  }
  for (size_t i = 1; i < out.size(); ++i) {
    PointFn2D d = sub_fn(out[i].fn, out[i - 1].fn);
    Axis dir = i % 2 == 1 ? Axis::vertical : Axis::horizontal;
    PlaneVerdict pv = check_valid_fn_2d(d, dir, 0, true);
    if (!pv.accepted)
      throw std::logic_error("strictify_tdpg: internal: transition " + std::to_string(i) +
                             " is not strict");
  }
  return TDPG{std::move(out), g.pa, g.pb};
}

Json tdpg_to_json(const TDPG& g) {
  Json j;
  j["type"] = "tdpg";
  j["pa"] = q_str(g.pa);
  j["pb"] = q_str(g.pb);
  Json fr = Json::array();
  for (const auto& f : g.frames) fr.push_back(pointfn_to_json(f.fn));
  j["frames"] = std::move(fr);
  return j;
}

TDPG tdpg_from_json(const Json& j) {
  try {
    if (j.at("type").get<std::string>() != "tdpg")
      throw std::invalid_argument("tdpg: wrong type tag");
    TDPG g;
    g.pa = q_parse(j.at("pa").get<std::string>());
    g.pb = q_parse(j.at("pb").get<std::string>());
    for (const auto& f : j.at("frames")) g.frames.emplace_back(pointfn2d_from_json(f));
    return g;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("tdpg: malformed JSON: ") + e.what());
  }
}

Json tipg_to_json(const TIPG& t) {
  Json j;
  j["type"] = "tipg";
  j["pa"] = q_str(t.pa);
  j["pb"] = q_str(t.pb);
  j["h"] = pointfn_to_json(t.h);
  j["v"] = pointfn_to_json(t.v);
  return j;
}

TIPG tipg_from_json(const Json& j) {
  try {
    if (j.at("type").get<std::string>() != "tipg")
      throw std::invalid_argument("tipg: wrong type tag");
    TIPG t;
    t.pa = q_parse(j.at("pa").get<std::string>());
    t.pb = q_parse(j.at("pb").get<std::string>());
    t.h = pointfn2d_from_json(j.at("h"));
    t.v = pointfn2d_from_json(j.at("v"));
    return t;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("tipg: malformed JSON: ") + e.what());
  }
}

}  // namespace wcf
