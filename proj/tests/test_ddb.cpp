#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "wcf/ddb.hpp"
#include "wcf/rational.hpp"

using namespace wcf;

namespace {

Q qp(const std::string& s) { return q_parse(s); }

DDBGame gp(std::initializer_list<const char*> ps) {
  std::vector<Q> v;
  for (const char* s : ps) v.push_back(qp(s));
  return ddb_game(std::move(v));
}

// Three-message games with P_A(3) = P_B(3) = 1/2; any p1 below 1/2 works
// with p2 = 1 / (2 (1 - p1)).
DDBGame fair3(long k) { return ddb_game({q(k, 41), q(41, 2 * (41 - k)), Q(1)}); }

}  // namespace

TEST_CASE("recursion reproduces hand values") {
  DDBGame g = gp({"1/2", "1/2", "1"});
  DDBRecursion r = ddb_recursion(g);
  CHECK(r.pa[3] == qp("3/4"));
  CHECK(r.pb[3] == qp("1/4"));
  CHECK(r.pu[0] == 1);
  CHECK(r.pu[1] == qp("1/2"));
  CHECK(r.pu[2] == qp("1/4"));
  CHECK(r.pu[3] == 0);
  for (int i = 0; i <= 3; ++i) CHECK(r.pa[i] + r.pb[i] + r.pu[i] == 1);
  CHECK_FALSE(r.fair);
  CHECK_FALSE(g.fair);

  CHECK(ddb_recursion(gp({"1"})).pa[1] == 1);

  DDBRecursion r2 = ddb_recursion(gp({"1/3", "1/2", "1"}));
  CHECK(r2.pa[3] == qp("2/3"));
  CHECK(r2.pb[3] == qp("1/3"));

  DDBRecursion rf = ddb_recursion(gp({"1/3", "3/4", "1"}));
  CHECK(rf.fair);
  CHECK(rf.pb[2] == qp("1/2"));
}

TEST_CASE("game validation") {
  CHECK_THROWS_WITH_AS(ddb_game(std::vector<Q>{}), "ddb: need at least one message probability",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(gp({"1/2", "1/2"}), "ddb: the last probability must be 1",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(gp({"3/2", "1"}), "ddb: probabilities must lie in [0, 1]",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(gp({"0", "1"}),
                       "ddb: probabilities before the last must avoid 0 and 1",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(gp({"1", "1"}),
                       "ddb: probabilities before the last must avoid 0 and 1",
                       std::invalid_argument);
}

TEST_CASE("honest simulation matches the recursion exactly") {
  DDBSimulation s = ddb_simulate_honest(gp({"1/2", "1/2", "1"}));
  CHECK(s.win_a == qp("3/4"));
  CHECK(s.win_b == qp("1/4"));
  CHECK(s.abort_mass == 0);
  CHECK(s.matches_closed_form);
  CHECK_FALSE(s.final_state.alice_aborted);
  CHECK_FALSE(s.final_state.bob_aborted);
  CHECK(std::abs(s.final_state.amps[0] - std::sqrt(0.75)) < 1e-15);
  CHECK(std::abs(s.final_state.amps[7] - 0.5) < 1e-15);
  double norm = 0;
  for (double a : s.final_state.amps) norm += a * a;
  CHECK(std::abs(norm - 1.0) < 1e-15);

  DDBSimulation one = ddb_simulate_honest(gp({"1"}));
  CHECK(one.win_a == 1);
  CHECK(one.win_b == 0);
  CHECK(one.matches_closed_form);

  DDBSimulation f = ddb_simulate_honest(gp({"1/3", "3/4", "1"}));
  CHECK(f.win_a == qp("1/2"));
  CHECK(f.win_b == qp("1/2"));

  DDBSimulation five = ddb_simulate_honest(gp({"1/3", "1/2", "1/4", "2/3", "1"}));
  CHECK(five.win_a == qp("1/2"));
  CHECK(five.win_b == qp("1/2"));
  CHECK(five.abort_mass == 0);
  CHECK(five.matches_closed_form);
}

TEST_CASE("simulation agrees with the recursion across a random sweep") {
  std::mt19937_64 rng(20260823);
  for (int t = 0; t < 25; ++t) {
    const long n = 1 + static_cast<long>(rng() % 6);
    std::vector<Q> p;
    for (long i = 0; i + 1 < n; ++i) p.push_back(q(1 + static_cast<long>(rng() % 8), 9));
    p.push_back(Q(1));
    DDBGame g = ddb_game(p);
    DDBRecursion rec = ddb_recursion(g);
    DDBSimulation sim = ddb_simulate_honest(g);
    CHECK(sim.win_a == rec.pa[n]);
    CHECK(sim.win_b == rec.pb[n]);
    CHECK(sim.abort_mass == 0);
    CHECK(sim.matches_closed_form);
  }
}

TEST_CASE("dual bound closed form") {
  CHECK(ddb_dual_bound_pb(gp({"1/3", "3/4", "1"})) == qp("2/3"));
  CHECK(ddb_dual_bound_pb(gp({"1/2", "1"})) == qp("1/2"));
  CHECK(ddb_dual_bound_pb(gp({"1/3", "1/2", "1/4", "2/3", "1"})) == qp("11/18"));
  CHECK(ddb_dual_bound_pb(gp({"1/3", "1/2", "1/4", "1/3", "1/5", "5/8", "1"})) == qp("107/180"));
  CHECK_THROWS_AS(ddb_dual_bound_pb(gp({"1/2", "1/2", "1"})), std::invalid_argument);

  for (long k = 1; k <= 20; ++k) {
    DDBGame g = fair3(k);
    CHECK(g.fair);
    CHECK(ddb_dual_bound_pb(g) == 1 - q(k, 41));
  }

  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(ddb_dual_bound_pb_d({1.0 - r, r, 1.0}) - r) < 1e-12);
  CHECK_THROWS_AS(ddb_dual_bound_pb_d({0.5, 0.5, 1.0}), std::invalid_argument);
}

TEST_CASE("dual certificate verifies exactly") {
  DDBCertificate c = ddb_dual_certificate_check(gp({"1/3", "3/4", "1"}));
  CHECK(c.accepted);
  CHECK(c.u0 == qp("2/3"));
  CHECK(c.failures.empty());

  DDBCertificate c2 = ddb_dual_certificate_check(gp({"1/2", "1"}));
  CHECK(c2.accepted);
  CHECK(c2.u0 == qp("1/2"));

  DDBCertificate c5 = ddb_dual_certificate_check(gp({"1/3", "1/2", "1/4", "2/3", "1"}));
  CHECK(c5.accepted);
  CHECK(c5.u0 == qp("11/18"));

  DDBCertificate c7 =
      ddb_dual_certificate_check(gp({"1/3", "1/2", "1/4", "1/3", "1/5", "5/8", "1"}));
  CHECK(c7.accepted);
  CHECK(c7.u0 == qp("107/180"));

  DDBCertificate bad = ddb_dual_certificate_check(gp({"1/3", "7/10", "1"}));
  CHECK_FALSE(bad.accepted);
  REQUIRE(bad.failures.size() == 1);
  CHECK(bad.failures[0].first == "fairness");

  for (long k = 1; k <= 20; ++k) {
    DDBCertificate fam = ddb_dual_certificate_check(fair3(k));
    CHECK(fam.accepted);
    CHECK(fam.u0 == 1 - q(k, 41));
  }
}

TEST_CASE("seesaw lower bound sandwiches the dual value") {
  DDBSeesaw s1 = ddb_primal_seesaw_pb(gp({"1"}), 100, 1);
  CHECK(s1.value == 0.0);
  CHECK(s1.converged);

  DDBGame g = gp({"1/3", "3/4", "1"});
  DDBSeesaw s = ddb_primal_seesaw_pb(g, 1500, 7);
  const double u0 = 2.0 / 3.0;
  CHECK(s.value <= u0 + 1e-6);
  CHECK(s.value >= u0 - 1e-3);

  DDBSeesaw again = ddb_primal_seesaw_pb(g, 1500, 7);
  CHECK(s.value == again.value);

  const double r = 1.0 / std::sqrt(2.0);
  DDBSeesaw sr = ddb_primal_seesaw_pb(std::vector<double>{1.0 - r, r, 1.0}, 1500, 7);
  CHECK(sr.value <= r + 1e-6);
  CHECK(sr.value >= r - 1e-3);
}

TEST_CASE("seesaw on a five-message game") {
  DDBGame g = gp({"1/3", "1/2", "1/4", "2/3", "1"});
  DDBSeesaw s = ddb_primal_seesaw_pb(g, 2500, 11);
  const double u0 = 11.0 / 18.0;
  CHECK(s.value <= u0 + 1e-6);
  CHECK(s.value >= u0 - 1e-3);
}

TEST_CASE("seesaw respects its input limits") {
  std::vector<Q> p8(7, qp("1/2"));
  p8.push_back(Q(1));
  DDBGame g8 = ddb_game(p8);
  CHECK_THROWS_WITH_AS(ddb_primal_seesaw_pb(g8, 10, 1), "ddb_primal_seesaw_pb: n must be at most 7",
                       std::invalid_argument);
}
