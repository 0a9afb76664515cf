#include "wcf/pointfn.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace wcf {

void PointFn1D::add(const Q& z, const Q& weight) {
  if (z < 0) throw std::invalid_argument("pointfn: negative coordinate " + q_str(z));
  if (weight == 0) return;
  auto it = w.find(z);
  if (it == w.end()) {
    w.emplace(z, weight);
  } else {
    it->second += weight;
    if (it->second == 0) w.erase(it);
  }
}

Q PointFn1D::at(const Q& z) const {
  auto it = w.find(z);
  return it == w.end() ? Q(0) : it->second;
}

bool PointFn1D::nonnegative() const {
  for (const auto& [z, v] : w)
    if (v < 0) return false;
  return true;
}

Q PointFn1D::total() const {
  Q s(0);
  for (const auto& [z, v] : w) s += v;
  return s;
}

Q PointFn1D::moment() const {
  Q s(0);
  for (const auto& [z, v] : w) s += z * v;
  return s;
}

void PointFn2D::add(const Q& x, const Q& y, const Q& weight) {
  if (x < 0 || y < 0)
    throw std::invalid_argument("pointfn: negative coordinate (" + q_str(x) + ", " + q_str(y) + ")");
  if (weight == 0) return;
  auto key = std::make_pair(x, y);
  auto it = w.find(key);
  if (it == w.end()) {
    w.emplace(std::move(key), weight);
  } else {
    it->second += weight;
    if (it->second == 0) w.erase(it);
  }
}

Q PointFn2D::at(const Q& x, const Q& y) const {
  auto it = w.find(std::make_pair(x, y));
  return it == w.end() ? Q(0) : it->second;
}

bool PointFn2D::nonnegative() const {
  for (const auto& [xy, v] : w)
    if (v < 0) return false;
  return true;
}

Q PointFn2D::total() const {
  Q s(0);
  for (const auto& [xy, v] : w) s += v;
  return s;
}

std::map<Q, PointFn1D> PointFn2D::lines(Axis a) const {
  std::map<Q, PointFn1D> out;
  for (const auto& [xy, v] : w) {
    const Q& line = (a == Axis::horizontal) ? xy.second : xy.first;
    const Q& coord = (a == Axis::horizontal) ? xy.first : xy.second;
    out[line].w.emplace(coord, v);
  }
  return out;
}

PointFn2D PointFn2D::transposed() const {
  PointFn2D out;
  for (const auto& [xy, v] : w) out.w.emplace(std::make_pair(xy.second, xy.first), v);
  return out;
}

PointFn1D add_fn(const PointFn1D& a, const PointFn1D& b) {
  PointFn1D out = a;
  for (const auto& [z, v] : b.w) out.add(z, v);
  return out;
}

PointFn2D add_fn(const PointFn2D& a, const PointFn2D& b) {
  PointFn2D out = a;
  for (const auto& [xy, v] : b.w) out.add(xy.first, xy.second, v);
  return out;
}

PointFn1D scale_fn(const PointFn1D& d, const Q& a) {
  if (a <= 0) throw std::invalid_argument("scale_fn: factor must be positive");
  PointFn1D out;
  for (const auto& [z, v] : d.w) out.w.emplace(z, v * a);
  return out;
}

PointFn2D scale_fn(const PointFn2D& d, const Q& a) {
  if (a <= 0) throw std::invalid_argument("scale_fn: factor must be positive");
  PointFn2D out;
  for (const auto& [xy, v] : d.w) out.w.emplace(xy, v * a);
  return out;
}

PointFn1D sub_fn(const PointFn1D& a, const PointFn1D& b) {
  PointFn1D out = a;
  for (const auto& [z, v] : b.w) out.add(z, -v);
  return out;
}

PointFn2D sub_fn(const PointFn2D& a, const PointFn2D& b) {
  PointFn2D out = a;
  for (const auto& [xy, v] : b.w) out.add(xy.first, xy.second, -v);
  return out;
}

Config2D::Config2D(PointFn2D f) : fn(std::move(f)) {
  for (const auto& [xy, v] : fn.w)
    if (v <= 0)
      throw std::invalid_argument("config: nonpositive weight at (" + q_str(xy.first) + ", " +
                                  q_str(xy.second) + ")");
}

MoveSpec MoveSpec::raise_move(Axis a, const Q& line, const Q& from, const Q& to) {
  MoveSpec m;
  m.kind = Kind::raise;
  m.axis = a;
  m.line = line;
  m.from = from;
  m.to = to;
  return m;
}

MoveSpec MoveSpec::merge_move(Axis a, const Q& line, const Q& z1, const Q& p1, const Q& z2,
                              const Q& p2, const Q& target) {
  MoveSpec m;
  m.kind = Kind::merge;
  m.axis = a;
  m.line = line;
  m.z1 = z1;
  m.p1 = p1;
  m.z2 = z2;
  m.p2 = p2;
  m.target = target;
  return m;
}

MoveSpec MoveSpec::split_move(Axis a, const Q& line, const Q& z, const Q& p1, const Q& p2,
                              const Q& z1_to, const Q& z2_to) {
  MoveSpec m;
  m.kind = Kind::split;
  m.axis = a;
  m.line = line;
  m.z = z;
  m.p1 = p1;
  m.p2 = p2;
  m.z1_to = z1_to;
  m.z2_to = z2_to;
  return m;
}

namespace {

// Divides out the positive content of the weights; conservation, sign, and
// strictness are all invariant under positive scaling, and generator output
// often carries a huge common factor.
PointFn1D content_normalized(const PointFn1D& d) {
  if (d.w.empty()) return d;
  Z num_gcd(0), den_lcm(1);
  for (const auto& [z, v] : d.w) {
    mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), v.get_num_mpz_t());
    mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), v.get_den_mpz_t());
  }
  Q content(num_gcd, den_lcm);
  content.canonicalize();
  if (content == 1) return d;
  PointFn1D out;
  for (const auto& [z, v] : d.w) out.w.emplace(z, v / content);
  return out;
}

Q direct_eval(const PointFn1D& d, const Q& l) {
  Q s(0);
  for (const auto& [z, v] : d.w) s += -v / (l + z);
  return s;
}

std::optional<Q> probe_small(const PointFn1D& d, const Q& lambda0, int iters) {
  Q t(1);
  for (int i = 0; i < iters; ++i) {
    t /= 2;
    if (direct_eval(d, lambda0 + t) < 0) return lambda0 + t;
  }
  return std::nullopt;
}

std::optional<Q> probe_large(const PointFn1D& d, const Q& lambda0, int iters) {
  Q t(1);
  for (int i = 0; i < iters; ++i) {
    t *= 2;
    if (direct_eval(d, lambda0 + t) < 0) return lambda0 + t;
  }
  return std::nullopt;
}

}  // namespace

LineVerdict check_valid_fn_1d(const PointFn1D& d0, const Q& lambda0, bool strict) {
  if (lambda0 < 0) throw std::invalid_argument("check_valid_fn_1d: negative lambda0");
  LineVerdict out;
  PointFn1D d = content_normalized(d0);
  Q tot = d.total();
  out.conserved = (tot == 0);
  out.mean_increases = (d.moment() > 0);

  if (d.w.empty()) {
    out.sign.nonnegative = true;
    out.sign.strictly_positive = false;
    out.sign.witness = Q(1);
    out.accepted = !strict;
    if (strict) out.diagnostic = "identity transition is not strict";
    return out;
  }

  bool have_sign = false;
  if (out.conserved && lambda0 == 0) {
    long negs = 0, poss = 0;
    for (const auto& [z, v] : d.w) (v < 0 ? ++negs : ++poss);
    if (d.at(Q(0)) > 0) {
      // Positive weight at the origin drives the sum to -inf as lambda -> 0+.
      if (auto wit = probe_small(d, Q(0), 10000)) {
        out.sign.nonnegative = false;
        out.sign.strictly_positive = false;
        out.sign.witness = wit;
        have_sign = true;
      }
    } else if (negs == 1) {
      Q z0, w0;
      for (const auto& [z, v] : d.w)
        if (v < 0) {
          z0 = z;
          w0 = -v;
        }
      if (z0 == 0) {
        // All mass leaves the origin rightward.
        out.sign.nonnegative = true;
        out.sign.strictly_positive = true;
        have_sign = true;
      } else {
        // One source at z0 > 0, every target > 0: valid exactly when the
        // harmonic conservation sum w/z does not increase (concavity of
        // z -> 1/(lambda+z) in 1/z), and then strictly so.
        Q hm(0);
        for (const auto& [z, v] : d.w) hm += v / z;
        if (hm <= 0) {
          out.sign.nonnegative = true;
          out.sign.strictly_positive = true;
          have_sign = true;
        } else if (auto wit = probe_small(d, Q(0), 10000)) {
          out.sign.nonnegative = false;
          out.sign.strictly_positive = false;
          out.sign.witness = wit;
          have_sign = true;
        }
      }
    } else if (poss == 1) {
      // One target: valid exactly when it sits at or above the source mean,
      // i.e. the first moment does not decrease; equality still gives a
      // strictly positive sum for two or more distinct sources.
      if (d.moment() >= 0) {
        out.sign.nonnegative = true;
        out.sign.strictly_positive = true;
        have_sign = true;
      } else if (auto wit = probe_large(d, Q(0), 10000)) {
        out.sign.nonnegative = false;
        out.sign.strictly_positive = false;
        out.sign.witness = wit;
        have_sign = true;
      }
    }
  }

  if (!have_sign) {
    std::vector<std::pair<Q, Q>> pts(d.w.begin(), d.w.end());
    out.sign = sign_on_shifted_axis(clear_denominators(pts), lambda0);
  }

  if (!out.conserved) {
    out.diagnostic = "weight not conserved: total " + q_str(tot);
    return out;
  }
  if (!out.sign.nonnegative) {
    out.diagnostic = "numerator negative";
    if (out.sign.witness) out.diagnostic += " at lambda = " + q_str(*out.sign.witness);
    return out;
  }
  if (strict && !out.sign.strictly_positive) {
    out.diagnostic = "numerator not strictly positive";
    return out;
  }
  if (strict && !out.mean_increases) {
    out.diagnostic = "mean does not strictly increase";
    return out;
  }
  out.accepted = true;
  return out;
}

LineVerdict check_transition_1d(const PointFn1D& p, const PointFn1D& q, bool strict) {
  if (!p.nonnegative() || !q.nonnegative())
    throw std::invalid_argument("check_transition_1d: negative input weight");
  return check_valid_fn_1d(sub_fn(q, p), Q(0), strict);
}

PlaneVerdict check_valid_fn_2d(const PointFn2D& d, Axis direction, const Q& lambda0,
                               bool strict) {
  PlaneVerdict out;
  out.direction = direction;
  for (const auto& [line, fn] : d.lines(direction)) {
    LineVerdict lv = check_valid_fn_1d(fn, lambda0, strict);
    if (!lv.accepted) out.line_failures.emplace_back(line, lv.diagnostic);
  }
  out.accepted = out.line_failures.empty();
  return out;
}

TransitionVerdict check_transition_2d(const PointFn2D& p, const PointFn2D& q) {
  if (!p.nonnegative() || !q.nonnegative())
    throw std::invalid_argument("check_transition_2d: negative input weight");
  PointFn2D d = sub_fn(q, p);
  TransitionVerdict out;
  out.vertical.direction = Axis::vertical;
  if (d.w.empty()) {
    out.cls = TransitionClass::both;
    out.horizontal.accepted = true;
    out.vertical.accepted = true;
    return out;
  }
  out.horizontal = check_valid_fn_2d(d, Axis::horizontal, Q(0), false);
  out.vertical = check_valid_fn_2d(d, Axis::vertical, Q(0), false);
  if (out.horizontal.accepted && out.vertical.accepted)
    out.cls = TransitionClass::both;
  else if (out.horizontal.accepted)
    out.cls = TransitionClass::horizontal;
  else if (out.vertical.accepted)
    out.cls = TransitionClass::vertical;
  else
    out.cls = TransitionClass::neither;
  return out;
}

Config2D apply_move(const Config2D& c, const MoveSpec& m) {
  auto key = [&](const Q& coord) {
    return m.axis == Axis::horizontal ? std::make_pair(coord, m.line)
                                      : std::make_pair(m.line, coord);
  };
  PointFn2D fn = c.fn;
  auto weight_at = [&](const Q& coord) {
    auto it = fn.w.find(key(coord));
    return it == fn.w.end() ? Q(0) : it->second;
  };
  auto adjust = [&](const Q& coord, const Q& delta) {
    if (delta == 0) return;
    auto k = key(coord);
    auto it = fn.w.find(k);
    if (it == fn.w.end()) {
      fn.w.emplace(std::move(k), delta);
    } else {
      it->second += delta;
      if (it->second == 0) fn.w.erase(it);
    }
  };

  switch (m.kind) {
    case MoveSpec::Kind::raise: {
      Q ws = weight_at(m.from);
      if (ws <= 0)
        throw std::invalid_argument("apply_move: no weight at raise source " + q_str(m.from));
      if (m.to < m.from)
        throw std::invalid_argument("apply_move: raise from " + q_str(m.from) + " to " +
                                    q_str(m.to) + " would lower the point");
      adjust(m.from, -ws);
      adjust(m.to, ws);
      break;
    }
    case MoveSpec::Kind::merge: {
      if (m.p1 <= 0 || m.p2 <= 0)
        throw std::invalid_argument("apply_move: merge weights must be positive");
      if (m.z1 == m.z2) throw std::invalid_argument("apply_move: merge sources must differ");
      if (weight_at(m.z1) < m.p1 || weight_at(m.z2) < m.p2)
        throw std::invalid_argument("apply_move: insufficient weight at merge source");
      Q mean = (m.p1 * m.z1 + m.p2 * m.z2) / (m.p1 + m.p2);
      if (m.target != mean)
        throw std::invalid_argument("apply_move: merge target " + q_str(m.target) +
                                    " is not the exact mean " + q_str(mean));
      adjust(m.z1, -m.p1);
      adjust(m.z2, -m.p2);
      adjust(m.target, m.p1 + m.p2);
      break;
    }
    case MoveSpec::Kind::split: {
      if (m.p1 <= 0 || m.p2 <= 0)
        throw std::invalid_argument("apply_move: split weights must be positive");
      if (weight_at(m.z) < m.p1 + m.p2)
        throw std::invalid_argument("apply_move: insufficient weight at split source " +
                                    q_str(m.z));
      if (m.z == 0) {
        if (m.z1_to != 0 || m.z2_to != 0)
          throw std::invalid_argument("apply_move: split from zero must stay at zero");
      } else {
        if (m.z1_to <= 0 || m.z2_to <= 0)
          throw std::invalid_argument("apply_move: split targets must be positive");
        if (m.p1 / m.z1_to + m.p2 / m.z2_to != (m.p1 + m.p2) / m.z)
          throw std::invalid_argument("apply_move: split does not conserve sum w/z");
      }
      adjust(m.z, -(m.p1 + m.p2));
      adjust(m.z1_to, m.p1);
      adjust(m.z2_to, m.p2);
      break;
    }
  }
  return Config2D(std::move(fn));
}

Json pointfn_to_json(const PointFn1D& d) {
  Json pts = Json::array();
  for (const auto& [z, v] : d.w) pts.push_back(Json{{"x", q_str(z)}, {"w", q_str(v)}});
  return Json{{"points", std::move(pts)}};
}

Json pointfn_to_json(const PointFn2D& d) {
  std::vector<std::tuple<Q, Q, Q>> rows;
  rows.reserve(d.w.size());
  for (const auto& [xy, v] : d.w) rows.emplace_back(xy.second, xy.first, v);
  std::sort(rows.begin(), rows.end());
  Json pts = Json::array();
  for (const auto& [y, x, v] : rows)
    pts.push_back(Json{{"x", q_str(x)}, {"y", q_str(y)}, {"w", q_str(v)}});
  return Json{{"points", std::move(pts)}};
}

PointFn1D pointfn1d_from_json(const Json& j) {
  PointFn1D d;
  try {
    for (const auto& item : j.at("points")) {
      if (item.contains("y"))
        throw std::invalid_argument("pointfn: unexpected y coordinate in 1-D document");
      d.add(q_parse(item.at("x").get<std::string>()), q_parse(item.at("w").get<std::string>()));
    }
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("pointfn: malformed JSON: ") + e.what());
  }
  return d;
}

PointFn2D pointfn2d_from_json(const Json& j) {
  PointFn2D d;
  try {
    for (const auto& item : j.at("points"))
      d.add(q_parse(item.at("x").get<std::string>()), q_parse(item.at("y").get<std::string>()),
            q_parse(item.at("w").get<std::string>()));
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("pointfn: malformed JSON: ") + e.what());
  }
  return d;
}

std::optional<Q> sample_negative_lambda(const PointFn1D& d, const Q& lambda0,
                                        long grid_points) {
  Q t(1);
  for (int i = 0; i < 60; ++i) {
    t /= 2;
    if (direct_eval(d, lambda0 + t) < 0) return lambda0 + t;
  }
  for (long i = 1; i <= grid_points; ++i) {
    Q l = lambda0 + q(i, 100);
    if (direct_eval(d, l) < 0) return l;
  }
  return std::nullopt;
}

}  // namespace wcf
