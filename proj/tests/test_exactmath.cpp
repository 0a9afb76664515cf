#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "wcf/polynomial.hpp"
#include "wcf/rational.hpp"

using namespace wcf;

namespace {

Poly poly(std::vector<long> coeffs) {
  std::vector<Q> c(coeffs.begin(), coeffs.end());
  return Poly(std::move(c));
}

}  // namespace

TEST_CASE("rational parse and print round-trip") {
  CHECK(q_parse("3/4") == q(3, 4));
  CHECK(q_str(q(3, 4)) == "3/4");
  CHECK(q_parse("-6/8") == q(-3, 4));
  CHECK(q_str(q_parse("-6/8")) == "-3/4");
  CHECK(q_parse("7") == Q(7));
  CHECK(q_str(Q(7)) == "7");
  CHECK(q_parse("0") == 0);
  CHECK(q_str(Q(0)) == "0");
  CHECK(q_parse("0/5") == 0);
  CHECK_THROWS_AS(q_parse("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(q_parse("abc"), std::invalid_argument);
  CHECK_THROWS_AS(q_parse(""), std::invalid_argument);
  CHECK_THROWS_AS(q_parse("1/2/3"), std::invalid_argument);
}

TEST_CASE("rational helpers") {
  CHECK(q_pow(q(2, 3), 5) == q(32, 243));
  CHECK(q_pow(q(-1, 2), 2) == q(1, 4));
  CHECK(q_pow(q(5, 7), 0) == 1);
  CHECK(q_floor(q(7, 2)) == 3);
  CHECK(q_floor(q(-7, 2)) == -4);
  CHECK(q_ceil(q(7, 2)) == 4);
  CHECK(q_ceil(q(-7, 2)) == -3);
  CHECK(q_abs(q(-3, 5)) == q(3, 5));
  CHECK(q_sign(q(-3, 5)) == -1);
}

TEST_CASE("rationalize recovers small denominators from doubles") {
  CHECK(rationalize(0.5, 1000) == q(1, 2));
  CHECK(rationalize(3.0, 10) == Q(3));
  CHECK(rationalize(0.0, 10) == 0);
  CHECK(rationalize(q_double(q(1, 3)), 1000000) == q(1, 3));
  CHECK(rationalize(q_double(q(355, 113)), 1000000) == q(355, 113));
  CHECK(rationalize(q_double(q(606, 897)), 1000000) == q(202, 299));
  CHECK(rationalize(q_double(q(-8, 299)), 1000000) == q(-8, 299));
}

TEST_CASE("polynomial basics") {
  Poly p = poly({2, -3, 1});
  CHECK(p.degree() == 2);
  CHECK(p.eval(Q(2)) == 0);
  CHECK(p.eval(Q(0)) == 2);
  CHECK(p.eval(q(1, 2)) == q(3, 4));
  CHECK(poly({1, 2, 0}).degree() == 1);
  CHECK(poly({0, 0}).is_zero());
  CHECK(poly({0, 0, 0, 3}).derivative() == poly({0, 0, 9}));
  CHECK(poly({0, 0, 1}).shifted(Q(1)) == poly({1, 2, 1}));
  CHECK(poly({1, 1}) * poly({-1, 1}) == poly({-1, 0, 1}));
  CHECK(poly({1, 1}) - poly({1, 1}) == Poly());
  CHECK(poly({1, 1}) * q(1, 2) == Poly({q(1, 2), q(1, 2)}));
}

TEST_CASE("clear_denominators frozen constants") {
  // Exact three-point merge: numerator is the constant 1/9.
  Poly n3 = clear_denominators({{Q(0), q(-1, 2)}, {q(1, 3), Q(1)}, {q(2, 3), q(-1, 2)}});
  CHECK(n3 == Poly::constant(q(1, 9)));

  // Four-point split-merge line: numerator is the constant 4/9.
  Poly n4 = clear_denominators(
      {{q(2, 3), Q(-1)}, {Q(1), Q(2)}, {q(5, 3), Q(-2)}, {Q(2), Q(1)}});
  CHECK(n4 == Poly::constant(q(4, 9)));

  CHECK(clear_denominators({}).is_zero());
  CHECK_THROWS_AS(clear_denominators({{Q(1), Q(1)}, {Q(1), Q(-1)}}), std::invalid_argument);
  CHECK_THROWS_AS(clear_denominators({{Q(-1), Q(1)}}), std::invalid_argument);
}

TEST_CASE("clear_denominators re-expansion identity on random inputs") {
  std::mt19937 rng(20240817);
  auto rnd_q = [&](long lo, long hi, long dmax) {
    long num = lo + static_cast<long>(rng() % static_cast<unsigned long>(hi - lo + 1));
    long den = 1 + static_cast<long>(rng() % static_cast<unsigned long>(dmax));
    return q(num, den);
  };
  for (int iter = 0; iter < 200; ++iter) {
    size_t n = 2 + rng() % 5;
    std::vector<std::pair<Q, Q>> pts;
    for (size_t i = 0; i < n; ++i) {
      Q z;
      bool fresh = false;
      while (!fresh) {
        z = rnd_q(0, 12, 4);
        fresh = true;
        for (auto& [zz, dd] : pts)
          if (zz == z) fresh = false;
      }
      pts.push_back({z, rnd_q(-6, 6, 5)});
    }
    bool zero_sum = (iter % 2 == 0);
    if (zero_sum) {
      Q s(0);
      for (size_t i = 0; i + 1 < pts.size(); ++i) s += pts[i].second;
      pts.back().second = -s;
    }
    Poly N = clear_denominators(pts);
    CHECK(N.degree() <= static_cast<long>(n) - 1);
    if (zero_sum) CHECK(N.degree() <= static_cast<long>(n) - 2);
    // Evaluate both sides at a random positive rational.
    Q l0 = rnd_q(1, 9, 7);
    Q lhs = N.eval(l0);
    Q sum(0), prod(1);
    for (auto& [z, d] : pts) {
      sum += -d / (l0 + z);
      prod *= (l0 + z);
    }
    CHECK(lhs == sum * prod);
  }
}

TEST_CASE("squarefree and odd-multiplicity parts") {
  Poly p = poly({-1, 1}) * poly({-1, 1}) * poly({-2, 1}) * poly({-2, 1}) * poly({-2, 1});
  CHECK(squarefree_part(p) == poly({2, -3, 1}));
  CHECK(odd_multiplicity_part(p) == poly({-2, 1}));

  // The quadratic sits at odd multiplicity; it has no real roots, so the
  // sign-change locus is still empty.
  Poly r = poly({1, 0, 1}) * poly({-1, 1}) * poly({-1, 1});
  CHECK(squarefree_part(r) == poly({-1, 1, -1, 1}));
  CHECK(odd_multiplicity_part(r) == poly({1, 0, 1}));
  CHECK(odd_multiplicity_part(poly({-1, 1}) * poly({-1, 1})) == Poly::constant(Q(1)));

  CHECK(squarefree_part(p * q(6, 1)) == squarefree_part(p));
  CHECK(odd_multiplicity_part(p * q(-5, 3)) == odd_multiplicity_part(p));
  CHECK(squarefree_part(Poly::constant(q(7, 2))) == Poly::constant(Q(1)));
}

TEST_CASE("sign decision frozen examples") {
  SignVerdict v = sign_on_open_positive_axis(poly({0, 0, 1}));
  CHECK(v.nonnegative);
  CHECK(v.strictly_positive);
  CHECK(!v.witness);

  v = sign_on_open_positive_axis(poly({-1, 1}));
  CHECK(!v.nonnegative);
  CHECK(!v.strictly_positive);
  REQUIRE(v.witness);
  CHECK(*v.witness == q(1, 2));

  v = sign_on_open_positive_axis(poly({1, -2, 1}));
  CHECK(v.nonnegative);
  CHECK(!v.strictly_positive);
  REQUIRE(v.witness);
  CHECK(*v.witness == Q(1));

  v = sign_on_open_positive_axis(Poly::constant(q(4, 9)));
  CHECK(v.strictly_positive);

  v = sign_on_open_positive_axis(Poly());
  CHECK(v.nonnegative);
  CHECK(!v.strictly_positive);
  REQUIRE(v.witness);
  CHECK(Poly().eval(*v.witness) == 0);
}

TEST_CASE("sign decision structural cases") {
  // Negative leading coefficient: doubling search lands beyond the last root.
  SignVerdict v = sign_on_open_positive_axis(poly({10, -1}));
  CHECK(!v.nonnegative);
  REQUIRE(v.witness);
  CHECK(*v.witness > 0);
  CHECK(poly({10, -1}).eval(*v.witness) < 0);

  // Positive ends, interior dip: witness comes from root isolation.
  Poly dip = poly({2, -3, 1});
  v = sign_on_open_positive_axis(dip);
  CHECK(!v.nonnegative);
  REQUIRE(v.witness);
  CHECK(*v.witness > 0);
  CHECK(dip.eval(*v.witness) < 0);

  // Irrational crossing: witness still found exactly.
  Poly cross = poly({-2, 0, 1});
  v = sign_on_open_positive_axis(cross);
  CHECK(!v.nonnegative);
  REQUIRE(v.witness);
  CHECK(*v.witness > 0);
  CHECK(cross.eval(*v.witness) < 0);

  // Irrational touch point: verdict exact, no rational witness exists.
  Poly touch = poly({-2, 0, 1}) * poly({-2, 0, 1});
  v = sign_on_open_positive_axis(touch);
  CHECK(v.nonnegative);
  CHECK(!v.strictly_positive);
  CHECK(!v.witness);

  // Touch at the origin does not spoil strict positivity on the open axis.
  v = sign_on_open_positive_axis(poly({0, 0, 1}) * poly({1, 0, 1}));
  CHECK(v.nonnegative);
  CHECK(v.strictly_positive);

  // Zero at the origin with a genuine interior touch keeps the interior witness.
  Poly ot = poly({0, 1}) * poly({9, -6, 1});
  v = sign_on_open_positive_axis(ot);
  CHECK(v.nonnegative);
  CHECK(!v.strictly_positive);
  REQUIRE(v.witness);
  CHECK(*v.witness == Q(3));
}

TEST_CASE("shifted axis") {
  SignVerdict v = sign_on_shifted_axis(poly({-1, 1}), Q(2));
  CHECK(v.nonnegative);
  CHECK(v.strictly_positive);

  v = sign_on_shifted_axis(poly({-1, 1}), Q(0));
  CHECK(!v.nonnegative);

  for (long l : {0L, 1L, 6L}) {
    v = sign_on_shifted_axis(Poly::constant(q(4, 9)), Q(l));
    CHECK(v.strictly_positive);
  }

  // Witness reported in original coordinates.
  v = sign_on_shifted_axis(poly({9, -6, 1}), Q(1));
  CHECK(v.nonnegative);
  CHECK(!v.strictly_positive);
  REQUIRE(v.witness);
  CHECK(*v.witness == Q(3));

  v = sign_on_shifted_axis(poly({-1, 1}), q(1, 2));
  CHECK(!v.nonnegative);
  REQUIRE(v.witness);
  CHECK(*v.witness > q(1, 2));
  CHECK(poly({-1, 1}).eval(*v.witness) < 0);

  CHECK_THROWS_AS(sign_on_shifted_axis(poly({1}), Q(-1)), std::invalid_argument);
}

TEST_CASE("sturm root counts") {
  CHECK(sturm_root_count(poly({-1, 0, 1}), Q(0), std::nullopt) == 1);
  CHECK(sturm_root_count(poly({1, 0, 1}), Q(0), std::nullopt) == 0);
  Poly cubic = poly({-1, 1}) * poly({-2, 1}) * poly({3, 1});
  CHECK(sturm_root_count(cubic, Q(0), std::nullopt) == 2);
  CHECK(sturm_root_count(cubic, Q(0), q(3, 2)) == 1);
  CHECK(sturm_root_count(cubic, Q(-4), std::nullopt) == 3);
  // Multiple roots count once.
  CHECK(sturm_root_count(poly({1, -2, 1}), Q(0), std::nullopt) == 1);
  // Half-open (a, b]: left endpoint excluded, right included.
  CHECK(sturm_root_count(poly({-1, 1}), Q(1), Q(2)) == 0);
  CHECK(sturm_root_count(poly({-1, 1}), q(1, 2), Q(1)) == 1);
  CHECK_THROWS_AS(sturm_root_count(poly({-1, 1}), Q(2), Q(1)), std::invalid_argument);
  CHECK_THROWS_AS(sturm_root_count(Poly(), Q(0), Q(1)), std::invalid_argument);
}

TEST_CASE("randomized verdicts agree with factored ground truth") {
  std::mt19937 rng(987654321);
  int checked = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    Poly p = Poly::constant(Q(1));
    long sign = 1;
    std::map<Q, long> pos_mult;
    int nf = 1 + rng() % 3;
    for (int f = 0; f < nf; ++f) {
      switch (rng() % 4) {
        case 0: {
          Q root = q(1 + rng() % 9, 1 + rng() % 9);
          long mult = 1 + rng() % 3;
          for (long m = 0; m < mult; ++m) p = p * Poly({-root, Q(1)});
          pos_mult[root] += mult;
          break;
        }
        case 1: {
          Q a = q(rng() % 9, 1 + rng() % 5);
          long mult = 1 + rng() % 2;
          for (long m = 0; m < mult; ++m) p = p * Poly({a, Q(1)});
          break;
        }
        case 2: {
          p = p * Poly({Q(1 + rng() % 4), Q(0), Q(1)});
          break;
        }
        default: {
          long s = (rng() % 2 == 0) ? 1 : -1;
          p = p * Poly::constant(q(s * (1 + rng() % 5), 1 + rng() % 3));
          sign *= s;
          break;
        }
      }
    }
    bool odd_pos_root = false, any_pos_root = false;
    for (auto& [r, m] : pos_mult) {
      any_pos_root = true;
      if (m % 2 == 1) odd_pos_root = true;
    }
    bool truth_nonneg = (sign > 0) && !odd_pos_root;
    bool truth_strict = truth_nonneg && !any_pos_root;

    SignVerdict v = sign_on_open_positive_axis(p);
    REQUIRE(v.nonnegative == truth_nonneg);
    REQUIRE(v.strictly_positive == truth_strict);
    if (!truth_nonneg) {
      REQUIRE(v.witness);
      REQUIRE(*v.witness > 0);
      REQUIRE(p.eval(*v.witness) < 0);
    } else if (!truth_strict) {
      // All touch roots are rational here, so a witness must be found.
      REQUIRE(v.witness);
      REQUIRE(*v.witness > 0);
      REQUIRE(p.eval(*v.witness) == 0);
    } else {
      REQUIRE(!v.witness);
    }
    // Spot-check against direct evaluation at a random positive point.
    Q x = q(1 + rng() % 40, 1 + rng() % 8);
    if (truth_nonneg) REQUIRE(p.eval(x) >= 0);
    ++checked;
  }
  CHECK(checked == 10000);
}
