#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "wcf/games.hpp"
#include "wcf/rational.hpp"

using namespace wcf;

namespace {

Q qp(const std::string& s) { return q_parse(s); }

PointFn2D fn2(std::initializer_list<std::array<const char*, 3>> pts) {
  PointFn2D f;
  for (const auto& p : pts) f.add(qp(p[0]), qp(p[1]), qp(p[2]));
  return f;
}

TDPG trivial_game() {
  TDPG g;
  g.pa = qp("1/2");
  g.pb = qp("1/2");
  g.frames.emplace_back(fn2({{"1", "0", "1/2"}, {"0", "1", "1/2"}}));
  g.frames.emplace_back(fn2({{"1", "1", "1/2"}, {"0", "1", "1/2"}}));
  g.frames.emplace_back(fn2({{"1/2", "1", "1"}}));
  return g;
}

TDPG sr_game() {
  TDPG g;
  g.pa = qp("1/2");
  g.pb = qp("1/2");
  g.frames.emplace_back(fn2({{"1", "0", "1/2"}, {"0", "1", "1/2"}}));
  g.frames.emplace_back(fn2({{"3/4", "0", "1/3"}, {"3", "0", "1/6"}, {"0", "1", "1/2"}}));
  g.frames.emplace_back(fn2({{"3/4", "0", "1/3"}, {"3", "1", "1/6"}, {"0", "1", "1/2"}}));
  g.frames.emplace_back(fn2({{"3/4", "0", "1/3"}, {"3/4", "1", "2/3"}}));
  g.frames.emplace_back(fn2({{"3/4", "2/3", "1"}}));
  return g;
}

TIPG trivial_tipg() { return tdpg_to_tipg(trivial_game()); }

}  // namespace

TEST_CASE("trivial game verifies with final point and bias") {
  GameReport rep = verify_tdpg(trivial_game());
  CHECK(rep.accepted);
  CHECK(rep.failures.empty());
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("1/2"));
  CHECK(rep.final_point->second == 1);
  CHECK(rep.bias() == qp("1/2"));
}

TEST_CASE("split raise merge merge game verifies") {
  GameReport rep = verify_tdpg(sr_game());
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("3/4"));
  CHECK(rep.final_point->second == qp("2/3"));
  CHECK(rep.bias() == qp("1/4"));
}

TEST_CASE("single frame game with a one sided split verifies") {
  TDPG g;
  g.pa = 0;
  g.pb = 1;
  g.frames.emplace_back(fn2({{"1", "0", "1"}}));
  GameReport rep = verify_tdpg(g);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == 1);
  CHECK(rep.bias() == qp("1/2"));
}

TEST_CASE("frame weight violations are located") {
  TDPG g = trivial_game();
  g.frames[1] = Config2D(fn2({{"1", "1", "1/2"}, {"0", "1", "1/4"}}));
  GameReport rep = verify_tdpg(g);
  CHECK(!rep.accepted);
  bool found = false;
  for (const auto& [where, what] : rep.failures)
    if (where == "frame 1" && what.find("total weight") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("lowering transitions are rejected with a locator") {
  TDPG g;
  g.pa = qp("1/2");
  g.pb = qp("1/2");
  g.frames.emplace_back(fn2({{"1", "0", "1/2"}, {"0", "1", "1/2"}}));
  g.frames.emplace_back(fn2({{"3/4", "0", "1/3"}, {"3", "0", "1/6"}, {"0", "1", "1/2"}}));
  g.frames.emplace_back(fn2({{"3/4", "0", "1/3"}, {"2", "0", "1/6"}, {"0", "1", "1/2"}}));
  g.frames.emplace_back(fn2({{"3/4", "0", "1/3"}, {"3/4", "1", "2/3"}}));
  g.frames.emplace_back(fn2({{"3/4", "2/3", "1"}}));
  GameReport rep = verify_tdpg(g);
  CHECK(!rep.accepted);
  bool found_move = false;
  for (const auto& [where, what] : rep.failures) {
    if (where.rfind("transition", 0) == 0)
      found_move = true;
  }
  CHECK(found_move);
}

TEST_CASE("start frame form is enforced unless general starts are allowed") {
  TDPG g;
  g.pa = qp("1/2");
  g.pb = qp("1/2");
  g.frames.emplace_back(fn2({{"1", "0", "1/4"}, {"0", "1", "3/4"}}));
  g.frames.emplace_back(fn2({{"1", "1", "1/4"}, {"0", "1", "3/4"}}));
  g.frames.emplace_back(fn2({{"1/4", "1", "1"}}));
  GameReport strict_rep = verify_tdpg(g);
  CHECK(!strict_rep.accepted);
  bool found = false;
  for (const auto& [where, what] : strict_rep.failures)
    if (where == "frame 0") found = true;
  CHECK(found);
  GameReport loose_rep = verify_tdpg(g, true);
  CHECK(loose_rep.accepted);
  CHECK(loose_rep.final_point->first == qp("1/4"));
}

TEST_CASE("truncated game misses its final point") {
  TDPG g = trivial_game();
  g.frames.pop_back();
  GameReport rep = verify_tdpg(g);
  CHECK(!rep.accepted);
  CHECK(!rep.final_point.has_value());
  CHECK_THROWS_AS(rep.bias(), std::logic_error);
}

TEST_CASE("split mismatch joins the failure list") {
  TDPG g = trivial_game();
  g.pa = qp("1/3");
  g.pb = qp("1/3");
  GameReport rep = verify_tdpg(g);
  CHECK(!rep.accepted);
  CHECK(rep.failures.size() >= 2);
}

TEST_CASE("differencing the trivial game gives the frozen h and v") {
  TIPG t = trivial_tipg();
  CHECK(t.pa == qp("1/2"));
  CHECK(t.pb == qp("1/2"));
  CHECK(t.v == fn2({{"1", "0", "-1/2"}, {"1", "1", "1/2"}}));
  CHECK(t.h == fn2({{"1", "1", "-1/2"}, {"0", "1", "-1/2"}, {"1/2", "1", "1"}}));
  GameReport rep = verify_tipg(t);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("1/2"));
  CHECK(rep.final_point->second == 1);
}

TEST_CASE("identity frames do not change the differenced game") {
  TDPG g = trivial_game();
  g.frames.insert(g.frames.begin() + 1, g.frames[1]);
  TIPG t = tdpg_to_tipg(g);
  TIPG t0 = trivial_tipg();
  CHECK(t.h == t0.h);
  CHECK(t.v == t0.v);
}

TEST_CASE("differencing rejects an invalid game") {
  TDPG g = trivial_game();
  g.frames.pop_back();
  CHECK_THROWS_AS(tdpg_to_tipg(g), std::invalid_argument);
}

TEST_CASE("perturbed transition weight is rejected with line locators") {
  TIPG t = trivial_tipg();
  t.h.add(qp("1/2"), 1, qp("-1/1000"));
  GameReport rep = verify_tipg(t);
  CHECK(!rep.accepted);
  bool found = false;
  for (const auto& [where, what] : rep.failures)
    if (where.rfind("h: line y = 1", 0) == 0) found = true;
  CHECK(found);
}

TEST_CASE("catalyst conversion of the trivial game lands within eps") {
  TDPG g = tipg_to_tdpg(trivial_tipg(), qp("1/10"));
  GameReport rep = verify_tdpg(g);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("1/2"));
  CHECK(rep.final_point->second == 1);
  CHECK(g.frames.size() == 21);
}

TEST_CASE("catalyst conversion of the split game lands within eps") {
  TIPG t = tdpg_to_tipg(sr_game());
  TDPG g = tipg_to_tdpg(t, qp("1/10"));
  GameReport rep = verify_tdpg(g);
  CHECK(rep.accepted);
  REQUIRE(rep.final_point.has_value());
  CHECK(rep.final_point->first == qp("85/112"));
  CHECK(rep.final_point->second == qp("4678/6975"));
  CHECK(rep.final_point->first - qp("3/4") <= qp("1/10"));
  CHECK(rep.final_point->second - qp("2/3") <= qp("1/10"));
}

TEST_CASE("line sweeps recover the exact final point when eps is tiny") {
  TDPG g = tipg_to_tdpg(trivial_tipg(), qp("1/4000"));
  GameReport rep = verify_tdpg(g);
  CHECK(rep.accepted);
  CHECK(g.frames.size() == 3);
  CHECK(rep.final_point->first == qp("1/2"));
  CHECK(rep.final_point->second == 1);

  TIPG ts = tdpg_to_tipg(sr_game());
  TDPG gs = tipg_to_tdpg(ts, qp("1/4000"));
  GameReport reps = verify_tdpg(gs);
  CHECK(reps.accepted);
  CHECK(gs.frames.size() == 5);
  CHECK(reps.final_point->first == qp("3/4"));
  CHECK(reps.final_point->second == qp("2/3"));
}

TEST_CASE("empty vertical part converts directly") {
  TIPG t;
  t.pa = 0;
  t.pb = 1;
  t.h = fn2({{"1", "0", "-1"}, {"3/2", "0", "1"}});
  GameReport rep = verify_tipg(t);
  CHECK(rep.accepted);
  TDPG g = tipg_to_tdpg(t, qp("1/10"));
  CHECK(g.frames.size() == 2);
  GameReport rep2 = verify_tdpg(g);
  CHECK(rep2.accepted);
  CHECK(rep2.final_point->first == qp("3/2"));
  CHECK(rep2.final_point->second == 0);
}

TEST_CASE("conversion validates its inputs") {
  CHECK_THROWS_AS(tipg_to_tdpg(trivial_tipg(), 0), std::invalid_argument);
  CHECK_THROWS_AS(tipg_to_tdpg(trivial_tipg(), qp("-1/10")), std::invalid_argument);
  TIPG bad = trivial_tipg();
  bad.h.add(qp("1/2"), 1, qp("-1/1000"));
  CHECK_THROWS_AS(tipg_to_tdpg(bad, qp("1/10")), std::invalid_argument);
  TIPG onesided;
  onesided.pa = 0;
  onesided.pb = 1;
  onesided.v = fn2({{"1", "0", "-1"}, {"1", "1", "1"}});
  onesided.h = fn2({{"1", "1", "-1"}, {"2", "1", "1"}});
  CHECK(verify_tipg(onesided).accepted);
  CHECK_THROWS_AS(tipg_to_tdpg(onesided, qp("1/10")), std::invalid_argument);
}

TEST_CASE("conversion soundness across eps scales") {
  for (const char* eps_s : {"1/10", "1/100"}) {
    Q eps = qp(eps_s);
    for (int which = 0; which < 2; ++which) {
      TDPG base = which == 0 ? trivial_game() : sr_game();
      GameReport orig = verify_tdpg(base);
      TIPG t = tdpg_to_tipg(base);
      TDPG g = tipg_to_tdpg(t, eps);
      GameReport rep = verify_tdpg(g);
      REQUIRE(rep.accepted);
      REQUIRE(rep.final_point.has_value());
      CHECK(rep.final_point->first >= orig.final_point->first);
      CHECK(rep.final_point->second >= orig.final_point->second);
      CHECK(rep.final_point->first <= orig.final_point->first + eps);
      CHECK(rep.final_point->second <= orig.final_point->second + eps);
      TIPG t2 = tdpg_to_tipg(g);
      GameReport rep2 = verify_tipg(t2);
      CHECK(rep2.accepted);
      CHECK(*rep2.final_point == *rep.final_point);
    }
  }
}

TEST_CASE("strictify shifts the trivial game by the frozen offsets") {
  TDPG g = strictify_tdpg(trivial_game(), qp("1/10"));
  CHECK(g.frames.size() == 3);
  CHECK(g.frames[0].fn == fn2({{"1", "0", "1/2"}, {"0", "1", "1/2"}}));
  CHECK(g.frames[1].fn == fn2({{"1", "21/20", "1/2"}, {"0", "21/20", "1/2"}}));
  CHECK(g.frames[2].fn == fn2({{"11/20", "21/20", "1"}}));
  GameReport rep = verify_tdpg(g);
  CHECK(rep.accepted);
  CHECK(rep.final_point->first == qp("11/20"));
  CHECK(rep.final_point->second == qp("21/20"));
  for (size_t i = 1; i < g.frames.size(); ++i) {
    PointFn2D d = sub_fn(g.frames[i].fn, g.frames[i - 1].fn);
    Axis dir = i % 2 == 1 ? Axis::vertical : Axis::horizontal;
    CHECK(check_valid_fn_2d(d, dir, 0, true).accepted);
  }
}

TEST_CASE("strictify pads to an alternating vertical first schedule") {
  TDPG g = strictify_tdpg(sr_game(), qp("1/10"));
  CHECK(g.frames.size() == 7);
  GameReport rep = verify_tdpg(g);
  CHECK(rep.accepted);
  CHECK(rep.final_point->first == qp("4/5"));
  CHECK(rep.final_point->second == qp("43/60"));
  for (size_t i = 1; i < g.frames.size(); ++i) {
    PointFn2D d = sub_fn(g.frames[i].fn, g.frames[i - 1].fn);
    Axis dir = i % 2 == 1 ? Axis::vertical : Axis::horizontal;
    CHECK(check_valid_fn_2d(d, dir, 0, true).accepted);
  }
}

TEST_CASE("strictify keeps already strict games acceptable") {
  TDPG g = strictify_tdpg(strictify_tdpg(trivial_game(), qp("1/10")), qp("1/100"));
  CHECK(verify_tdpg(g).accepted);
}

TEST_CASE("strictify rejects nonpositive eps and invalid games") {
  CHECK_THROWS_AS(strictify_tdpg(trivial_game(), 0), std::invalid_argument);
  CHECK_THROWS_AS(strictify_tdpg(trivial_game(), qp("-1")), std::invalid_argument);
  TDPG g = trivial_game();
  g.frames.pop_back();
  CHECK_THROWS_AS(strictify_tdpg(g, qp("1/10")), std::invalid_argument);
}

TEST_CASE("tdpg json round trip is exact") {
  TDPG g = trivial_game();
  Json j = tdpg_to_json(g);
  CHECK(j.dump() ==
        "{\"frames\":[{\"points\":[{\"w\":\"1/2\",\"x\":\"1\",\"y\":\"0\"},"
        "{\"w\":\"1/2\",\"x\":\"0\",\"y\":\"1\"}]},{\"points\":["
        "{\"w\":\"1/2\",\"x\":\"0\",\"y\":\"1\"},{\"w\":\"1/2\",\"x\":\"1\",\"y\":\"1\"}]},"
        "{\"points\":[{\"w\":\"1\",\"x\":\"1/2\",\"y\":\"1\"}]}],"
        "\"pa\":\"1/2\",\"pb\":\"1/2\",\"type\":\"tdpg\"}");
  TDPG g2 = tdpg_from_json(j);
  CHECK(g2.pa == g.pa);
  CHECK(g2.pb == g.pb);
  REQUIRE(g2.frames.size() == g.frames.size());
  for (size_t i = 0; i < g.frames.size(); ++i) CHECK(g2.frames[i].fn == g.frames[i].fn);
}

TEST_CASE("tipg json round trip is exact") {
  TIPG t = trivial_tipg();
  Json j = tipg_to_json(t);
  CHECK(j.dump() ==
        "{\"h\":{\"points\":[{\"w\":\"-1/2\",\"x\":\"0\",\"y\":\"1\"},"
        "{\"w\":\"1\",\"x\":\"1/2\",\"y\":\"1\"},{\"w\":\"-1/2\",\"x\":\"1\",\"y\":\"1\"}]},"
        "\"pa\":\"1/2\",\"pb\":\"1/2\",\"type\":\"tipg\","
        "\"v\":{\"points\":[{\"w\":\"-1/2\",\"x\":\"1\",\"y\":\"0\"},"
        "{\"w\":\"1/2\",\"x\":\"1\",\"y\":\"1\"}]}}");
  TIPG t2 = tipg_from_json(j);
  CHECK(t2.h == t.h);
  CHECK(t2.v == t.v);
  CHECK(t2.pa == t.pa);
  CHECK(t2.pb == t.pb);
}

TEST_CASE("json loaders reject malformed input") {
  Json j = tdpg_to_json(trivial_game());
  j["type"] = "tipg";
  CHECK_THROWS_AS(tdpg_from_json(j), std::invalid_argument);
  Json k = tipg_to_json(trivial_tipg());
  k.erase("v");
  CHECK_THROWS_AS(tipg_from_json(k), std::invalid_argument);
  Json m = Json::object();
  CHECK_THROWS_AS(tdpg_from_json(m), std::invalid_argument);
}
