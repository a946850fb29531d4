#include "doctest.h"

#include "lind/compile.hpp"

using namespace lind;

namespace {

AlphabetPtr dbool() { return boolean_alphabet(*sigma_ex()); }

std::vector<std::string> sorted_free(const Formula& f) {
  auto s = free_vars(f);
  return {s.begin(), s.end()};
}

// compile with exactly the free variables and compare against satisfies
EquivalenceReport agree(const std::string& text, const AlphabetPtr& sigma, int k, int maxNV, const LanguageTable& langs = {}) {
  auto phi = parse_formula(text, sigma, k, langs);
  auto rec = compile(phi, sigma, sorted_free(*phi), k);
  auto rep = check_equivalence(*phi, *rec, maxNV);
  INFO(text << " k=" << k);
  for (const auto& m : rep.mismatches) INFO(m.tree << " expected " << m.expected);
  CHECK(rep.ok());
  CHECK(rep.checked > 0);
  return rep;
}

}  // namespace

TEST_CASE("atomic recognizers") {
  auto sig = sigma_ex();
  for (int k : {0, 1, 2}) {
    std::vector<std::string> atoms{"P[a](x)", "P[f](x)", "root(x)", "x<y", "succ_1(x,y)", "succ_2(x,y)", "true", "false"};
    if (k >= 1) {
      for (int j = 1; j <= k; ++j) {
        atoms.push_back("max[1," + std::to_string(j) + "](x)");
        atoms.push_back("max[2," + std::to_string(j) + "](x)");
        atoms.push_back("left[" + std::to_string(j) + "](x)");
        atoms.push_back("right[" + std::to_string(j) + "](x)");
      }
    }
    atoms.push_back("left[0](x)");
    atoms.push_back("right[" + std::to_string(k + 1) + "](x)");
    for (const auto& a : atoms) {
      auto phi = parse_formula(a, sig, k);
      auto rec = compile(phi, sig, {"x", "y"}, k);
      auto rep = check_equivalence(*phi, *rec, 4);
      INFO(a << " k=" << k);
      CHECK(rep.ok());
    }
  }
  // compile_atomic directly
  auto root = parse_formula("root(x)", sig, 1);
  auto rec = compile_atomic(*root, sig, {"x"}, 1, 2);
  CHECK(membership(*rec, parse_tree("f(v1,a)", *sig, 1), {{"x", 0}}));
  CHECK_FALSE(membership(*rec, parse_tree("f(v1,a)", *sig, 1), {{"x", 2}}));
  CHECK_THROWS_AS(compile_atomic(*root, sig, {"x"}, 2, 2), RankOverflow);
  CHECK_THROWS_AS(compile_atomic(*parse_formula("x<y", sig, 0), sig, {"x"}, 0, 2), Error);
}

TEST_CASE("Boolean combinations") {
  auto sig = sigma_ex();
  agree("P[a](x) & !root(x)", sig, 1, 4);
  agree("root(x) | x<y", sig, 0, 4);
  agree("(P[b](y) -> succ_1(x,y)) & !false", sig, 1, 4);
  // complement flips membership pointwise
  auto phi = parse_formula("x<y", sig, 0);
  auto rec = compile(phi, sig, {"x", "y"}, 0);
  auto neg = compile(f_not(phi), sig, {"x", "y"}, 0);
  for (const auto& t : enumerate_trees(*sig, 0, 3))
    for_each_interpretation(t, {"x", "y"}, [&](const Interpretation& l) {
      CHECK(membership(*rec, t, l) != membership(*neg, t, l));
    });
}

TEST_CASE("existential quantifier over the Boolean alphabet") {
  auto d = dbool();
  auto rep = agree("exists x. P[1_0](x)", d, 0, 4);
  CHECK(rep.accepted > 0);
  CHECK(rep.accepted < rep.checked);
  auto phi = parse_formula("exists x. P[1_0](x)", d, 0);
  auto rec = compile(phi, d, {}, 0);
  CHECK(rec->kind == "quantifier");
  CHECK(membership(*rec, parse_tree("0_2(1_0,0_0)", *d, 0), {}));
  CHECK_FALSE(membership(*rec, parse_tree("0_2(0_0,0_0)", *d, 0), {}));
  // second components of the letter images are τ of the plain letters
  const auto& qp = *rec->quant;
  const auto& z = *rec->alphabet;
  for (int l = 0; l < static_cast<int>(z.alphabet()->size()); ++l) {
    int inner = qp.inner->letter(z.symbol_of(l), 0);
    CHECK(rec->gamma[static_cast<std::size_t>(l)].key[0] == qp.t.morphism.image[static_cast<std::size_t>(inner)].index);
  }
  // a corrupted accepting set is caught
  auto bad = std::make_shared<CompiledRecognizer>(*rec);
  bad->accepting = [](const Value&) { return true; };
  CHECK_FALSE(check_equivalence(*phi, *bad, 3).ok());
}

TEST_CASE("quantifiers over Sigma_ex") {
  auto sig = sigma_ex();
  agree("exists x. P[a](x)", sig, 0, 4);
  agree("exists x. P[a](x) & !root(x)", sig, 1, 4);
  agree("forall x. (P[f](x) -> exists y. succ_2(x,y) & P[b](y))", sig, 0, 4);
  agree("mod[2,1] x. P[a](x)", sig, 0, 4);
  agree("mod[3,0] x. P[f](x)", sig, 1, 4);
  agree("exists y. x<y & P[b](y)", sig, 1, 4);
}

TEST_CASE("Lindström quantifiers over path and next languages") {
  auto sig = sigma_ex();
  LanguageTable langs;
  auto d = dbool();
  langs["Path"] = automaton_language("Path", builtin_K_path(d, 0));
  langs["Next"] = automaton_language("Next", builtin_K_forall_next(d, 0));
  agree("Q[Path] x { 1: P[f](x) | P[a](x) }", sig, 0, 4, langs);
  agree("Q[Next] x { 1: P[a](x) }", sig, 0, 4, langs);
}

TEST_CASE("deterministic family is enforced") {
  auto sig = sigma_ex();
  auto d = dbool();
  auto lang = automaton_language("E", builtin_K_exists(d, 0));
  std::vector<FormulaPtr> fam(d->size(), f_label(*sig->find("a"), "x"));
  auto q = f_quant(lang, "x", fam);
  CHECK_THROWS_AS(compile(q, sig, {}, 0), DeterminismViolation);
}

TEST_CASE("defined languages: flattening and automaton route agree") {
  auto sig = sigma_ex();
  auto file = parse_formula_file(
      "alphabet inline f/2 a/0 b/0\n"
      "rank 0\n"
      "deflang E over boolean : exists z. P[1_0](z) & !root(z)\n"
      "formula Q[E] x { 1: P[a](x) }\n");
  auto phi = file.formulas[0];
  auto flat = compile(phi, sig, {}, 0);
  auto viaAut = language_via_automaton(*phi->q->lang);
  REQUIRE(viaAut->automaton);
  auto direct = compile(f_quant(viaAut, phi->q->var, phi->q->family), sig, {}, 0);
  CHECK(direct->kind == "quantifier");
  for (const auto& t : enumerate_trees(*sig, 0, 3)) CHECK(membership(*flat, t, {}) == membership(*direct, t, {}));
  CHECK(check_equivalence(*phi, *flat, 4).ok());
  // the automaton of a defined language matches its definition
  const auto& lang = *phi->q->lang;
  for (const auto& t : enumerate_trees(*lang.delta, 0, 3)) CHECK(viaAut->automaton->accepts(t) == lang.contains(t));
}

TEST_CASE("recognizer automata and materialization") {
  auto sig = sigma_ex();
  auto phi = parse_formula("exists x. P[f](x) & max[1,1](x)", sig, 1);
  auto rec = compile(phi, sig, {}, 1);
  auto a = recognizer_automaton(*rec);
  for (const auto& t : enumerate_trees(*sig, 1, 4)) CHECK(a.accepts(t) == membership(*rec, t, {}));
  auto atom = compile(parse_formula("root(x)", sig, 0), sig, {"x"}, 0);
  auto m = materialize(*atom);
  CHECK(m.preclone->sort_size(0) > 0);
  CHECK(check_axioms(*m.preclone).ok());
}

TEST_CASE("committed corpus compiles to equivalent recognizers") {
  for (const char* name : {"sigma_k0", "sigma_k1", "bool_k0", "bool_k1"}) {
    auto file = load_formula_file(std::string(LIND_TEST_DATA) + "/corpus/" + name + ".lind");
    for (std::size_t i = 0; i < file.formulas.size(); ++i) {
      const auto& phi = file.formulas[i];
      auto rec = compile(phi, file.sigma, sorted_free(*phi), file.rank);
      auto rep = check_equivalence(*phi, *rec, 4);
      INFO(name << ": " << file.sources[i]);
      CHECK(rep.ok());
    }
  }
}
