#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "wcf/games.hpp"
#include "wcf/ladders.hpp"
#include "wcf/rational.hpp"

using namespace wcf;

namespace {

Q qp(const std::string& s) { return q_parse(s); }

FamilyParams fparams(long k, const std::string& eps, long gamma, const std::string& zstar) {
  FamilyParams fp;
  fp.k = k;
  fp.eps = qp(eps);
  fp.gamma = gamma;
  fp.zstar = qp(zstar);
  return fp;
}

}  // namespace

TEST_CASE("continuum cutoff values") {
  CHECK(continuum_cutoff(1) == qp("2/3"));
  CHECK(continuum_cutoff(2) == qp("3/5"));
  CHECK(continuum_cutoff(3) == qp("4/7"));
  CHECK(continuum_cutoff(7) == qp("8/15"));
  CHECK_THROWS_WITH_AS(continuum_cutoff(0), "continuum_cutoff: k must be at least 1",
                       std::invalid_argument);
}

TEST_CASE("rung weights from interpolation") {
  const std::vector<Q> xs = {qp("2/3"), Q(1), qp("5/3"), Q(2)};
  const std::vector<Q> fv(4, qp("4/9"));
  PointFn1D r = rung_from_polynomial(xs, fv);
  REQUIRE(r.w.size() == 4);
  CHECK(r.at(qp("2/3")) == -1);
  CHECK(r.at(Q(1)) == 2);
  CHECK(r.at(qp("5/3")) == -2);
  CHECK(r.at(Q(2)) == 1);

  PointFn1D z = rung_from_polynomial({Q(0), Q(1)}, {Q(0), Q(0)});
  CHECK(z.w.empty());

  PointFn1D lin = rung_from_polynomial({Q(1), Q(2), Q(3)}, {Q(2), Q(1), Q(0)});
  REQUIRE(lin.w.size() == 2);
  CHECK(lin.at(Q(1)) == -1);
  CHECK(lin.at(Q(2)) == 1);
}

TEST_CASE("rung construction rejects bad input") {
  CHECK_THROWS_WITH_AS(rung_from_polynomial({Q(1)}, {Q(1)}), "rung: need at least two points",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(rung_from_polynomial({Q(1), Q(2)}, {Q(1)}),
                       "rung: need one value per point", std::invalid_argument);
  CHECK_THROWS_WITH_AS(rung_from_polynomial({Q(-1), Q(1)}, {Q(0), Q(0)}),
                       "rung: points must be nonnegative", std::invalid_argument);
  CHECK_THROWS_WITH_AS(rung_from_polynomial({Q(1), Q(2), Q(1)}, {Q(0), Q(0), Q(0)}),
                       "rung: duplicate point 1", std::invalid_argument);
  CHECK_THROWS_WITH_AS(rung_from_polynomial({Q(1), Q(2)}, {Q(1), Q(2)}),
                       "rung: values interpolate to degree n - 1; degree at most n - 2 is "
                       "required",
                       std::invalid_argument);
  CHECK_THROWS_AS(rung_from_polynomial({Q(1), Q(2)}, {Q(-1), Q(-1)}), std::invalid_argument);
  CHECK_THROWS_WITH(rung_from_polynomial({Q(1), Q(2)}, {Q(-1), Q(-1)}),
                    doctest::Contains("rung: line function is not valid"));
}

TEST_CASE("smallest one-third ladder") {
  CHECK_THROWS_WITH_AS(build_bias_sixth_tipg(3), "build_bias_sixth_tipg: gamma must be at least 4",
                       std::invalid_argument);
  TIPG t = build_bias_sixth_tipg(4);
  CHECK(t.pa == qp("1/2"));
  CHECK(t.pb == qp("1/2"));
  CHECK(t.h.at(Q(0), Q(1)) == qp("-1/2"));
  CHECK(t.h.at(qp("1/3"), Q(1)) == 0);
  CHECK(t.h.at(qp("2/3"), Q(1)) == qp("7/10"));
  CHECK(t.h.at(qp("4/3"), Q(1)) == qp("-1/5"));
  CHECK(t.h.at(qp("2/3"), qp("4/3")) == qp("-1/5"));
  CHECK(t.h.at(Q(1), qp("4/3")) == qp("1/5"));
  GameReport rep = verify_tipg(t);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("10/11"));
  CHECK(rep.final_point->second == qp("10/11"));

  GameReport r5 = verify_tipg(build_bias_sixth_tipg(5));
  CHECK(r5.accepted);
  CHECK(r5.final_point->first == qp("6/7"));
}

TEST_CASE("ladder structure at gamma 20") {
  TIPG t = build_bias_sixth_tipg(20);
  CHECK(t.v == t.h.transposed());
  CHECK(t.h.total() == 0);
  for (const auto& [y, row] : t.h.lines(Axis::horizontal)) CHECK(row.total() == 0);
  GameReport rep = verify_tipg(t);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("42/59"));
  CHECK(rep.final_point->second == qp("42/59"));
}

TEST_CASE("deep ladder stays exact") {
  TIPG t = build_bias_sixth_tipg(100);
  CHECK(t.h.at(qp("1/3"), Q(1)) == 0);
  CHECK(t.h.at(qp("2/3"), Q(1)) == qp("295/202"));
  CHECK(t.h.at(Q(1), qp("2/3")) == qp("-295/202"));
  CHECK(t.h.at(qp("4/3"), qp("2/3")) == qp("97/101"));
  CHECK(t.h.at(Q(0), Q(1)) == qp("-1/2"));
  CHECK(t.h.at(qp("2/3"), qp("202/299")) == qp("-1/2"));
  CHECK(t.h.at(qp("202/299"), qp("202/299")) == qp("1/2"));
  GameReport rep = verify_tipg(t);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("202/299"));
  CHECK(rep.final_point->second == qp("202/299"));
}

TEST_CASE("family parameter validation") {
  CHECK_THROWS_WITH_AS(build_family_tipg(fparams(0, "1/10", 5, "7/10")),
                       "family: k must be a positive integer", std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_family_tipg(fparams(1, "0", 5, "7/10")),
                       "family: eps must be positive", std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_family_tipg(fparams(1, "1/2", 5, "7/10")),
                       "family: k * eps must stay below 1/2", std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_family_tipg(fparams(1, "1/10", 4, "7/10")),
                       "family: gamma must exceed 4k", std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_family_tipg(fparams(1, "1/10", 5, "1/2")),
                       "family: zstar must lie strictly between 1/2 and 1",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_family_tipg(fparams(1, "3/10", 5, "7/10")),
                       "family: zstar/eps must be an integer", std::invalid_argument);
  CHECK_THROWS_WITH_AS(build_family_tipg(fparams(1, "1/100", 5, "9/10")),
                       "family: no rows between zstar/eps and gamma", std::invalid_argument);
  CHECK_FALSE(check_family_feasibility(fparams(1, "1/100", 5, "9/10")));
}

TEST_CASE("feasible family member verifies") {
  FamilyParams fp = fparams(1, "3/10", 7, "9/10");
  CHECK(check_family_feasibility(fp));
  CHECK_FALSE(check_family_feasibility(fparams(1, "3/10", 6, "9/10")));
  FamilyFns F = build_family_tipg(fp);
  CHECK(F.g(Q(0)) == 1);
  CHECK(F.g(qp("12/5")) == 0);
  CHECK(F.D(1) == qp("3/5"));
  CHECK(F.D(-1) == qp("3/5"));
  CHECK(F.D(0) == qp("-3/10"));
  CHECK_THROWS_WITH_AS(F.D(2), "family: D offset out of range", std::invalid_argument);
  CHECK(F.formula_notes.size() == 2);
  CHECK(F.h.at(Q(1), Q(0)) == qp("-1/2"));
  CHECK(F.h.at(qp("3/5"), qp("9/10")) == 0);
  CHECK(F.h.at(qp("9/10"), qp("9/10")) == qp("1/2"));
  CHECK(F.v == F.h.transposed());
  GameReport rep = verify_tipg(F.tipg());
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("9/10"));
  CHECK(rep.final_point->second == qp("9/10"));
}

TEST_CASE("infeasible family member is rejected by verification") {
  FamilyParams fp = fparams(1, "17/100", 5, "51/100");
  CHECK_FALSE(check_family_feasibility(fp));
  FamilyFns F;
  CHECK_NOTHROW(F = build_family_tipg(fp));
  GameReport rep = verify_tipg(F.tipg());
  CHECK_FALSE(rep.accepted);
}

TEST_CASE("feasibility flips with the meeting point") {
  CHECK(check_family_feasibility(fparams(1, "7/160", 512, "7/10")));
  CHECK_FALSE(check_family_feasibility(fparams(1, "2/5", 20, "4/5")));
}

TEST_CASE("parameter search returns first feasible set") {
  FamilyParams a = search_family_params(1, qp("1/10"));
  CHECK(a.k == 1);
  CHECK(a.zstar == qp("23/30"));
  CHECK(a.eps == qp("23/120"));
  CHECK(a.gamma == 128);

  FamilyParams b = search_family_params(1, qp("1/50"));
  CHECK(b.zstar == qp("103/150"));
  CHECK(b.eps == qp("103/4800"));
  CHECK(b.gamma == 2048);

  FamilyParams c = search_family_params(2, qp("1/50"));
  CHECK(c.zstar == qp("31/50"));
  CHECK(c.eps == qp("31/3200"));
  CHECK(c.gamma == 4096);

  FamilyParams d = search_family_params(3, qp("1/50"));
  CHECK(d.zstar == qp("207/350"));
  CHECK(d.eps == qp("207/33600"));
  CHECK(d.gamma == 6144);
}

TEST_CASE("parameter search rejects bad requests") {
  CHECK_THROWS_WITH_AS(search_family_params(0, qp("1/10")),
                       "search_family_params: k must be at least 1", std::invalid_argument);
  CHECK_THROWS_WITH_AS(search_family_params(1, Q(0)),
                       "search_family_params: gap must be positive; the cutoff is only "
                       "approached in the limit",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(search_family_params(1, qp("1/2")),
                       "search_family_params: gap places zstar at or above 1",
                       std::invalid_argument);
}

TEST_CASE("ladder converts to a discrete game within eps") {
  TIPG t = build_bias_sixth_tipg(12);
  TDPG g = tipg_to_tdpg(t, qp("1/10"));
  GameReport rep = verify_tdpg(g);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first >= qp("26/35"));
  CHECK(rep.final_point->first <= qp("26/35") + qp("1/10"));
  CHECK(rep.final_point->second >= qp("26/35"));
  CHECK(rep.final_point->second <= qp("26/35") + qp("1/10"));
}

TEST_CASE("short ladder converts at fine eps") {
  TIPG t = build_bias_sixth_tipg(6);
  TDPG g = tipg_to_tdpg(t, qp("1/100"));
  GameReport rep = verify_tdpg(g);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first >= qp("14/17"));
  CHECK(rep.final_point->first <= qp("14/17") + qp("1/100"));
  CHECK(rep.final_point->second >= qp("14/17"));
  CHECK(rep.final_point->second <= qp("14/17") + qp("1/100"));
}

TEST_CASE("family member converts at two eps scales") {
  FamilyFns F = build_family_tipg(fparams(1, "3/10", 7, "9/10"));
  TIPG t = F.tipg();
  for (const char* es : {"1/10", "1/100"}) {
    TDPG g = tipg_to_tdpg(t, qp(es));
    GameReport rep = verify_tdpg(g);
    CHECK(rep.accepted);
    REQUIRE(rep.final_point.has_value());
    CHECK(rep.final_point->first >= qp("9/10"));
    CHECK(rep.final_point->first <= qp("9/10") + qp(es));
    CHECK(rep.final_point->second >= qp("9/10"));
    CHECK(rep.final_point->second <= qp("9/10") + qp(es));
  }
}

TEST_CASE("deep ladder conversion reports its budget honestly") {
  TIPG t = build_bias_sixth_tipg(100);
  CHECK_THROWS_WITH_AS(tipg_to_tdpg(t, qp("1/100")),
                       doctest::Contains("construction budget"), std::runtime_error);
}
