#include "doctest.h"

#include <random>

#include "lind/syntactic.hpp"

using namespace lind;

namespace {

AlphabetPtr dbool() { return boolean_alphabet(*sigma_ex()); }

Elem named(const FinitaryPreclone& s, int rank, const std::string& name) {
  for (std::uint32_t i = 0; i < s.sort_size(rank); ++i)
    if (s.describe({rank, i}) == name) return {rank, i};
  FAIL("no element " << name);
  return {};
}

std::vector<bool> accepting_true0(const FinitaryPreclone& s) {
  std::vector<bool> p(s.sort_size(0), false);
  p[named(s, 0, "true_0").index] = true;
  return p;
}

}  // namespace

TEST_CASE("context enumeration") {
  auto s = t_exists(3).preclone;
  auto c01 = enumerate_contexts(*s, 0, 1);
  CHECK(c01.size() == 4);
  for (const auto& c : c01) {
    CHECK(c.k1 == 0);
    CHECK(c.k2 == 0);
    CHECK(c.u.rank == 1);
    REQUIRE(c.v.size() == 1);
    CHECK(c.v[0].rank == 0);
  }
  auto c00 = enumerate_contexts(*s, 0, 0);
  CHECK(c00.size() == 2);
  for (const auto& c : c00) CHECK(c.v.empty());
  // k=1, n=0: only l = 0 shapes, u of rank 2
  auto c10 = enumerate_contexts(*s, 1, 0);
  CHECK(c10.size() == 4);
  // deterministic order and lookup
  ContextTable tab(*s, 1, 2);
  CHECK(tab.contexts() == ContextTable(*s, 1, 2).contexts());
  for (std::size_t i = 0; i < tab.size(); ++i) CHECK(tab.index_of(tab[i]) == i);
  // at truncation 2 a single component cannot carry rank >= 3
  auto s2 = t_exists(2).preclone;
  CHECK(ContextTable(*s2, 4, 1).size() == 0);
  CHECK(ContextTable(*s2, 3, 1).size() == 8);
}

TEST_CASE("L-contexts in T_exists") {
  auto s = t_exists(3).preclone;
  auto P = accepting_true0(*s);
  Elem or1 = named(*s, 1, "or_1"), true1 = named(*s, 1, "true_1");
  Context c{or1, 0, 0, {}};
  CHECK(is_L_context(*s, P, named(*s, 0, "true_0"), c));
  CHECK_FALSE(is_L_context(*s, P, named(*s, 0, "false_0"), c));
  Context k{true1, 0, 0, {}};
  CHECK(is_L_context(*s, P, named(*s, 0, "true_0"), k));
  CHECK(is_L_context(*s, P, named(*s, 0, "false_0"), k));
  Context c2{or1, 0, 0, {named(*s, 0, "false_0"), named(*s, 0, "true_0")}};
  CHECK(is_L_context(*s, P, named(*s, 2, "or_2"), c2));
}

TEST_CASE("syntactic congruence, trivial partitions") {
  auto s = t_exists(3).preclone;
  std::vector<bool> none(s->sort_size(0), false), all(s->sort_size(0), true);
  for (const auto& P : {none, all}) {
    auto cls = syntactic_congruence(*s, 0, P);
    for (const auto& r : cls)
      for (auto c : r) CHECK(c == 0);
  }
  auto cls = syntactic_congruence(*s, 0, accepting_true0(*s));
  for (const auto& r : cls) CHECK(r == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("syntactic pg-pair of K_0(exists)") {
  auto a = builtin_K_exists(dbool(), 0);
  auto res = syntactic_pgpair(a, 3);
  CHECK(res.class_counts() == std::vector<std::size_t>{2, 2, 2, 2});
  auto iso = find_isomorphism(res.pg, *t_exists(3).preclone);
  CHECK(iso.has_value());
  CHECK(check_axioms(*res.pg.preclone).ok());
  for (const auto& t : enumerate_trees(*dbool(), 0, 4)) CHECK(res.accepts(t) == a.accepts(t));
  // generators are the images of the four letters, and they are distinct up to rank
  CHECK(res.pg.generators.size() == 4);
}

TEST_CASE("syntactic pg-pair of modular counting") {
  for (auto [p, r] : {std::pair{2, 0}, {2, 1}, {3, 1}}) {
    auto a = builtin_K_mod(dbool(), 0, p, r);
    auto res = syntactic_pgpair(a, 3);
    CHECK(res.class_counts() == std::vector<std::size_t>(4, static_cast<std::size_t>(p)));
    CHECK(find_isomorphism(res.pg, *t_mod(p, 3).preclone).has_value());
    for (const auto& t : enumerate_trees(*dbool(), 0, 4)) CHECK(res.accepts(t) == a.accepts(t));
  }
}

TEST_CASE("syntactic pg-pair of the empty language") {
  TreeAutomaton a(sigma_ex(), 1, 1);
  for (int s = 0; s < static_cast<int>(sigma_ex()->size()); ++s) {
    int n = (*sigma_ex())[s].arity;
    std::vector<int> q(static_cast<std::size_t>(n), 0);
    a.set_step(s, q, 0);
  }
  a.set_var_state(1, 0);
  auto res = syntactic_pgpair(a, 3);
  CHECK(res.class_counts() == std::vector<std::size_t>{1, 1, 1, 1});
  CHECK_FALSE(res.accepts(parse_tree("f(v1,a)", *sigma_ex(), 1)));
}

TEST_CASE("syntactic pg-pair recognizes random rank-1 languages") {
  auto sig = sigma_ex();
  for (std::uint64_t seed : {1, 2, 6, 7}) {
    auto a = random_automaton(sig, 1, 3, seed);
    auto res = syntactic_pgpair(a, 2);
    CHECK(check_axioms(*res.pg.preclone).ok());
    for (const auto& t : enumerate_trees(*sig, 1, 4)) CHECK(res.accepts(t) == a.accepts(t));
    // the quotient never grows
    auto full = res.transformation.pg.preclone;
    for (int n = 0; n <= 2; ++n) CHECK(res.pg.preclone->sort_size(n) <= full->sort_size(n));
  }
}

TEST_CASE("L-contexts agree with double quotients") {
  auto sig = sigma_ex();
  std::mt19937_64 rng(11);
  for (std::uint64_t seed : {1, 6, 7}) {
    int k = 1;
    auto a = minimize(random_automaton(sig, k, 3, seed));
    auto tr = transformation_pgpair(a, 2);
    const auto& T = *tr.pg.preclone;
    auto alg = std::static_pointer_cast<const TransformationAlgebra>(T.algebra_ptr());
    std::vector<int> vs{a.var_state(1)};
    std::vector<bool> P;
    for (std::uint32_t i = 0; i < T.sort_size(k); ++i)
      P.push_back(a.is_final(static_cast<int>(alg->apply(T.key({k, i}), vs))));
    auto us = enumerate_trees(*sig, 1, 2);
    auto us2 = enumerate_trees(*sig, 2, 2);
    auto fs = enumerate_trees(*sig, 1, 3);
    auto zs = enumerate_trees(*sig, 0, 2);
    // (u, 0, v, 0) with u of rank 1, v of rank 1; (u, 1, v, 0) and (u, 0, v, 1) with u of rank 2, v of rank 0
    struct Shape {
      const std::vector<RankedTree>* us;
      int k1, k2;
      const std::vector<RankedTree>* vs;
    };
    for (const Shape& sh : {Shape{&us, 0, 0, &us}, Shape{&us2, 1, 0, &zs}, Shape{&us2, 0, 1, &zs}}) {
      for (int trial = 0; trial < 12; ++trial) {
        const auto& u = (*sh.us)[rng() % sh.us->size()];
        const auto& v = (*sh.vs)[rng() % sh.vs->size()];
        TreeTuple vt{{v}};
        auto q = right_quotient(left_quotient(a, u, sh.k1, sh.k2), vt);
        Context c{morphism_eval(tr.morphism, u), sh.k1, sh.k2, {morphism_eval(tr.morphism, v)}};
        for (const auto& f : fs) {
          bool ctx = is_L_context(T, P, morphism_eval(tr.morphism, f), c);
          CHECK(ctx == q.accepts(f));
          std::vector<RankedTree> outer;
          for (int i = 0; i < sh.k1; ++i) outer.push_back(RankedTree::unit());
          outer.push_back(compose(f, std::vector<RankedTree>{v}));
          for (int i = 0; i < sh.k2; ++i) outer.push_back(RankedTree::unit());
          CHECK(ctx == a.accepts(compose(u, outer)));
        }
      }
    }
  }
}
