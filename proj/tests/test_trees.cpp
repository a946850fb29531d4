#include "doctest.h"

#include <functional>

#include "lind/trees.hpp"

using namespace lind;

namespace {

RankedTree T(const char* s) { return parse_tree(s, *sigma_ex()); }

std::vector<std::string> texts(const std::vector<RankedTree>& ts) {
  std::vector<std::string> out;
  for (const auto& t : ts) out.push_back(t.to_string(*sigma_ex()));
  return out;
}

}  // namespace

TEST_CASE("alphabet parsing") {
  auto a = RankedAlphabet::parse("f/2\na/0 # leaf\n\nb/0\n");
  CHECK(a.size() == 3);
  CHECK(a.max_arity() == 2);
  CHECK(a.find("b") == 2);
  CHECK_THROWS_AS(RankedAlphabet::parse("f/2\nf/1\n"), Error);
  CHECK_THROWS_AS(RankedAlphabet::parse("v3/0\n"), Error);
  CHECK_THROWS_AS(RankedAlphabet::parse("f\n"), ParseError);
  auto d = boolean_alphabet(*sigma_ex());
  CHECK(d->to_string() == "0_0/0\n1_0/0\n0_2/2\n1_2/2\n");
  CHECK(is_boolean_alphabet(*d));
  CHECK_FALSE(is_boolean_alphabet(*sigma_ex()));
}

TEST_CASE("parse_tree") {
  auto t = parse_tree("f(a,b)", *sigma_ex(), 0);
  CHECK(t.size() == 3);
  CHECK(t.rank() == 0);
  CHECK(parse_tree(" v1 ", *sigma_ex(), 1).is_unit());
  CHECK_THROWS_AS(parse_tree("f(v2,v1)", *sigma_ex(), 2), ParseError);
  CHECK_THROWS_AS(parse_tree("f(a)", *sigma_ex()), ParseError);
  CHECK_THROWS_AS(parse_tree("g(a,b)", *sigma_ex()), ParseError);
  CHECK_THROWS_AS(parse_tree("f(a,b", *sigma_ex()), ParseError);
  CHECK_THROWS_AS(parse_tree("f(a,b)", *sigma_ex(), 1), ParseError);
  CHECK(T("f(v1,f(a,v2))").to_string(*sigma_ex()) == "f(v1,f(a,v2))");
}

TEST_CASE("compose") {
  auto t = T("f(a,v1)");
  CHECK(compose(RankedTree::unit(), oplus({t})) == t);
  CHECK(compose(T("f(v1,v2)"), oplus({T("a"), T("b")})) == T("f(a,b)"));
  CHECK(compose(T("f(v1,v2)"), oplus({T("f(v1,v2)"), RankedTree::unit()})) == T("f(f(v1,v2),v3)"));
  CHECK_THROWS_AS(compose(T("f(v1,v2)"), oplus({T("a")})), Error);
}

TEST_CASE("oplus and unit tuples") {
  auto ab = oplus({T("a"), T("b")});
  CHECK(ab.width() == 2);
  CHECK(ab.total_rank() == 0);
  auto three = unit_tuple(3);
  CHECK(three.width() == 3);
  CHECK(three.total_rank() == 3);
  CHECK(oplus({}).width() == 0);
}

TEST_CASE("factor_at") {
  auto t = T("f(a,b)");
  auto root = factor_at(t, {});
  CHECK(root.r.is_unit());
  CHECK(root.k1 == 0);
  CHECK(root.k2 == 0);
  CHECK(root.s == t);
  auto left = factor_at(t, {0});
  CHECK(left.r == T("f(v1,b)"));
  CHECK(left.s == T("a"));
  auto t2 = T("f(v1,f(a,v2))");
  auto inner = factor_at(t2, {1});
  CHECK(inner.r == T("f(v1,v2)"));
  CHECK(inner.k1 == 1);
  CHECK(inner.k2 == 0);
  CHECK(inner.s == T("f(a,v1)"));
  CHECK_THROWS_AS(factor_at(t2, {0}), Error);
}

TEST_CASE("factor_at recomposes exhaustively") {
  for (int k = 0; k <= 2; ++k)
    for (const auto& t : enumerate_trees(*sigma_ex(), k, 4))
      for (std::size_t x : t.nv_nodes()) {
        auto f = factor_at(t, t.path_of(x));
        CHECK(f.k1 + f.s.rank() + f.k2 == k);
        std::vector<RankedTree> parts(static_cast<std::size_t>(f.k1));
        parts.push_back(f.s);
        parts.resize(parts.size() + static_cast<std::size_t>(f.k2));
        CHECK(compose(f.r, oplus(parts)) == t);
      }
}

TEST_CASE("enumerate_trees") {
  CHECK(texts(enumerate_trees(*sigma_ex(), 0, 1)) == std::vector<std::string>{"a", "b"});
  CHECK(texts(enumerate_trees(*sigma_ex(), 0, 3)) ==
        std::vector<std::string>{"a", "b", "f(a,a)", "f(a,b)", "f(b,a)", "f(b,b)"});
  CHECK(texts(enumerate_trees(*sigma_ex(), 1, 0)) == std::vector<std::string>{"v1"});
  auto r1 = enumerate_trees(*sigma_ex(), 1, 2);
  CHECK(texts(r1) == std::vector<std::string>{"v1", "f(a,v1)", "f(b,v1)", "f(v1,a)", "f(v1,b)"});
}

TEST_CASE("unit and associativity axioms of the free preclone") {
  const auto& s = *sigma_ex();
  std::vector<std::vector<RankedTree>> byRank;
  for (int r = 0; r <= 2; ++r) byRank.push_back(enumerate_trees(s, r, 2));
  std::size_t checked = 0;
  for (int n = 0; n <= 2; ++n)
    for (const auto& f : byRank[static_cast<std::size_t>(n)]) {
      CHECK(compose(RankedTree::unit(), oplus({f})) == f);
      CHECK(compose(f, unit_tuple(n)) == f);
      // f·(g)·(h) against f·(g_i·h̄_i) with small g and h
      std::vector<RankedTree> g;
      std::function<void(int)> pick = [&](int pos) {
        if (pos == n) {
          auto fg = compose(f, g);
          int m = fg.rank();
          std::vector<RankedTree> h;
          std::function<void(int)> pickH = [&](int p) {
            if (p == m) {
              std::vector<RankedTree> inner;
              std::size_t off = 0;
              for (const auto& gi : g) {
                std::vector<RankedTree> slice(h.begin() + static_cast<std::ptrdiff_t>(off),
                                              h.begin() + static_cast<std::ptrdiff_t>(off) + gi.rank());
                off += static_cast<std::size_t>(gi.rank());
                inner.push_back(compose(gi, slice));
              }
              CHECK(compose(fg, h) == compose(f, inner));
              CHECK(compose(fg, h).rank() == oplus(h).total_rank());
              ++checked;
              return;
            }
            for (int r = 0; r <= 1; ++r)
              for (const auto& x : byRank[static_cast<std::size_t>(r)]) {
                if (x.nv_count() > 1) continue;
                h.push_back(x);
                pickH(p + 1);
                h.pop_back();
              }
          };
          pickH(0);
          return;
        }
        for (int r = 0; r <= 2; ++r)
          for (const auto& x : byRank[static_cast<std::size_t>(r)]) {
            if (x.nv_count() > 1) continue;
            g.push_back(x);
            pick(pos + 1);
            g.pop_back();
          }
      };
      pick(0);
    }
  CHECK(checked > 100);
}

TEST_CASE("paths and subtrees") {
  auto t = T("f(f(a,v1),b)");
  CHECK(t.path_of(3) == std::vector<int>{0, 1});
  CHECK(t.index_of(std::vector<int>{0, 1}) == 3);
  CHECK(t.subtree(1) == T("f(a,v1)"));
  CHECK(t.nv_count() == 4);
  CHECK(t.nv_nodes().size() == 4);
}
