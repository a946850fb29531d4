#include "doctest.h"

#include "lind/automata.hpp"

using namespace lind;

namespace {

AlphabetPtr dbool() { return boolean_alphabet(*sigma_ex()); }
RankedTree D(const char* s) { return parse_tree(s, *dbool()); }
RankedTree S(const char* s) { return parse_tree(s, *sigma_ex()); }

// states {0,1}, a->0, b->1, f = max
TreeAutomaton max_automaton() {
  TreeAutomaton a(sigma_ex(), 0, 2);
  a.set_step(1, {}, 0);
  a.set_step(2, {}, 1);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) a.set_step(0, std::vector<int>{x, y}, std::max(x, y));
  a.set_final(1);
  return a;
}

}  // namespace

TEST_CASE("run and accepts") {
  auto a = max_automaton();
  CHECK(a.run(S("f(a,b)")) == 1);
  CHECK(a.run(S("a")) == 0);
  TreeAutomaton r1(sigma_ex(), 1, 3);
  r1.set_var_state(1, 2);
  CHECK(r1.run(RankedTree::unit()) == 2);
  CHECK_THROWS_AS(a.run(RankedTree::unit()), Error);
  auto e = builtin_K_exists(dbool(), 0);
  CHECK(e.accepts(D("1_2(0_0,0_0)")));
  CHECK_FALSE(e.accepts(D("0_2(0_0,0_0)")));
  CHECK(complement(e).accepts(D("0_2(0_0,0_0)")));
}

TEST_CASE("text format round trip") {
  auto a = builtin_K_mod(dbool(), 1, 3, 2);
  std::string text = a.to_text();
  auto b = TreeAutomaton::parse(text, dbool());
  CHECK(b.to_text() == text);
  auto c = TreeAutomaton::parse(text);  // inferred alphabet
  CHECK(c.to_text() == text);
  CHECK_THROWS_AS(TreeAutomaton::parse("rank 0\nstates 1\nfinals\ntrans a -> 0\ntrans a -> 0\n"), ParseError);
  CHECK_THROWS_AS(TreeAutomaton::parse("rank 1\nstates 1\nfinals\ntrans a -> 0\n"), ParseError);
  CHECK_THROWS_AS(TreeAutomaton::parse("rank 0\nstates 2\nfinals\ntrans f 0 0 -> 1\ntrans a -> 0\n"), ParseError);
}

TEST_CASE("boolean operations match set semantics") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto a = random_automaton(sigma_ex(), 1, 3, seed);
    auto b = random_automaton(sigma_ex(), 1, 2, seed + 100);
    auto i = intersect(a, b), u = unite(a, b), c = complement(a), ac = intersect(a, c), cc = complement(c);
    for (const auto& t : enumerate_trees(*sigma_ex(), 1, 4)) {
      CHECK(i.accepts(t) == (a.accepts(t) && b.accepts(t)));
      CHECK(u.accepts(t) == (a.accepts(t) || b.accepts(t)));
      CHECK(c.accepts(t) == !a.accepts(t));
      CHECK_FALSE(ac.accepts(t));
      CHECK(cc.accepts(t) == a.accepts(t));
    }
  }
}

TEST_CASE("minimize") {
  auto e = builtin_K_exists(dbool(), 0);
  auto big = intersect(unite(e, e), e);
  auto m = minimize(big);
  CHECK(m.states() == 2);
  CHECK(minimize(m).states() == m.states());
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto a = random_automaton(sigma_ex(), seed % 2, 4, seed);
    auto ma = minimize(a);
    CHECK(minimize(ma).states() == ma.states());
    CHECK(ma.states() <= a.states());
    for (const auto& t : enumerate_trees(*sigma_ex(), a.rank(), 4)) CHECK(ma.accepts(t) == a.accepts(t));
  }
  // rank-1 K_path and K_forall_next stay language-equivalent
  for (auto a : {builtin_K_path(dbool(), 1), builtin_K_forall_next(dbool(), 1)}) {
    auto ma = minimize(a);
    for (const auto& t : enumerate_trees(*dbool(), 1, 4)) CHECK(ma.accepts(t) == a.accepts(t));
  }
}

TEST_CASE("left quotient examples") {
  auto e = builtin_K_exists(dbool(), 0);
  auto all = left_quotient(e, D("0_2(v1,1_0)"), 0, 0);
  auto same = left_quotient(e, D("0_2(v1,0_0)"), 0, 0);
  auto id = left_quotient(e, RankedTree::unit(), 0, 0);
  for (const auto& t : enumerate_trees(*dbool(), 0, 4)) {
    CHECK(all.accepts(t));
    CHECK(same.accepts(t) == e.accepts(t));
    CHECK(id.accepts(t) == e.accepts(t));
  }
  CHECK_THROWS_AS(left_quotient(e, D("0_2(v1,v2)"), 0, 0), Error);
}

TEST_CASE("right quotient examples") {
  auto e = builtin_K_exists(dbool(), 0);
  auto all = right_quotient(e, oplus({D("1_0")}));
  for (const auto& t : enumerate_trees(*dbool(), 1, 3)) CHECK(all.accepts(t));
  auto m2 = builtin_K_mod(dbool(), 2, 2, 1);
  auto same = right_quotient(m2, unit_tuple(2));
  for (const auto& t : enumerate_trees(*dbool(), 2, 3)) CHECK(same.accepts(t) == m2.accepts(t));
  CHECK_THROWS_AS(right_quotient(e, unit_tuple(1)), Error);
}

TEST_CASE("quotients agree with their definitions") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto a = random_automaton(sigma_ex(), 2, 3, seed);
    // u of rank 2 (k1 = 1, k2 = 0): quotient has rank 1
    auto u = S("f(v1,f(v2,a))");
    auto lq = left_quotient(a, u, 1, 0);
    for (const auto& f : enumerate_trees(*sigma_ex(), 1, 3))
      CHECK(lq.accepts(f) == a.accepts(compose(u, oplus({RankedTree::unit(), f}))) );
    auto v = oplus({S("f(v1,b)"), S("a"), RankedTree::unit()});
    auto rq = right_quotient(a, v);
    for (const auto& f : enumerate_trees(*sigma_ex(), 3, 3)) CHECK(rq.accepts(f) == a.accepts(compose(f, v)));
  }
}

TEST_CASE("builtin languages") {
  auto d = dbool();
  auto e1 = builtin_K_exists(d, 0);
  CHECK(e1.accepts(D("1_0")));
  CHECK(e1.states() == 2);
  CHECK_FALSE(builtin_K_exists(d, 1).accepts(RankedTree::unit()));
  CHECK_THROWS_AS(builtin_K_exists(sigma_ex(), 0), Error);

  auto m21 = builtin_K_mod(d, 0, 2, 1);
  CHECK_FALSE(m21.accepts(D("1_2(1_0,0_0)")));
  CHECK(m21.accepts(D("1_0")));
  CHECK(builtin_K_mod(d, 0, 2, 0).accepts(D("0_0")));
  CHECK_THROWS_AS(builtin_K_mod(d, 0, 2, 2), Error);
  CHECK_THROWS_AS(builtin_K_mod(d, 0, 1, 0), Error);

  auto p = builtin_K_path(d, 0);
  CHECK(p.accepts(D("1_2(0_0,1_0)")));
  CHECK_FALSE(p.accepts(D("0_2(1_0,1_0)")));
  CHECK(p.accepts(D("1_0")));
  CHECK_FALSE(p.accepts(D("1_2(0_0,0_0)")));

  auto n = builtin_K_forall_next(d, 0);
  CHECK(n.accepts(D("0_2(1_0,1_0)")));
  CHECK_FALSE(n.accepts(D("0_2(1_0,0_0)")));
  CHECK(n.accepts(D("1_0")));
  CHECK(n.accepts(D("0_2(1_2(0_0,0_0),1_0)")));
}
