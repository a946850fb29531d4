// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "lind/compile.hpp"

using namespace lind;

namespace {

const std::string kData = LIND_TEST_DATA;

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos)));
    if (next == std::string::npos) return out;
    pos = next + sep.size();
  }
}

// Non-comment, non-blank lines.
std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

AlphabetPtr load_alphabet(const std::string& file) {
  return std::make_shared<const RankedAlphabet>(RankedAlphabet::load(kData + "/" + file));
}

Interpretation restrict(const Interpretation& l, const std::set<std::string>& vars) {
  Interpretation out;
  for (const auto& [k, v] : l)
    if (vars.count(k)) out[k] = v;
  return out;
}

Elem named(const FinitaryPreclone& s, int rank, const std::string& name) {
  for (std::uint32_t i = 0; i < s.sort_size(rank); ++i)
    if (s.describe({rank, i}) == name) return {rank, i};
  throw Error("no element " + name);
}

// ---------------------------------------------------------------- 1

Outcome preclone_axioms() {
  Outcome o;
  std::vector<std::pair<std::string, PgPair>> cases{
      {"t_exists(3)", t_exists(3)}, {"t_mod(2,3)", t_mod(2, 3)}, {"t_mod(3,3)", t_mod(3, 3)}};
  auto sig = sigma_ex();
  for (std::uint64_t seed : {1, 2, 6, 7})
    cases.push_back({"random 3-state seed " + std::to_string(seed),
                     transformation_pgpair(random_automaton(sig, 1, 3, seed), 2).pg});
  cases.push_back({"random 2-state seed 2", transformation_pgpair(random_automaton(sig, 1, 2, 2), 2).pg});
  std::size_t checked = 0, bad = 0;
  for (const auto& [name, pg] : cases) {
    auto rep = check_axioms(*pg.preclone);
    checked += rep.checked;
    bad += rep.violations.size();
    if (!rep.ok()) o.detail += name + ": " + rep.violations.front() + "; ";
  }
  o.ok = bad == 0;
  o.detail += std::to_string(cases.size()) + " pg-pairs, " + std::to_string(checked) + " checks, " + std::to_string(bad) +
              " violations";
  return o;
}

// ---------------------------------------------------------------- 2, 3

std::string sizes(const SyntacticResult& r) {
  std::string s;
  for (auto c : r.class_counts()) s += (s.empty() ? "" : ",") + std::to_string(c);
  return s;
}

Outcome syntactic_exists() {
  auto d = boolean_alphabet(*sigma_ex());
  auto res = syntactic_pgpair(builtin_K_exists(d, 0), 3);
  bool iso = find_isomorphism(res.pg, *t_exists(3).preclone).has_value();
  bool sz = res.class_counts() == std::vector<std::size_t>{2, 2, 2, 2};
  return {iso && sz, "sort sizes " + sizes(res) + ", isomorphism " + (iso ? "found" : "not found")};
}

Outcome syntactic_mod() {
  auto d = boolean_alphabet(*sigma_ex());
  Outcome o;
  for (auto [p, r] : {std::pair{2, 0}, {2, 1}, {3, 1}}) {
    auto res = syntactic_pgpair(builtin_K_mod(d, 0, p, r), 3);
    bool iso = find_isomorphism(res.pg, *t_mod(p, 3).preclone).has_value();
    bool sz = res.class_counts() == std::vector<std::size_t>(4, static_cast<std::size_t>(p));
    o.ok = o.ok && iso && sz;
    o.detail += "(" + std::to_string(p) + "," + std::to_string(r) + "): " + sizes(res) + (iso ? " iso" : " NOT iso") + "; ";
  }
  return o;
}

// ---------------------------------------------------------------- 4

Outcome corpus_equivalence() {
  std::size_t formulas = 0, checked = 0, mismatches = 0;
  std::string first;
  for (const char* name : {"sigma_k0", "sigma_k1", "bool_k0", "bool_k1"}) {
    auto file = load_formula_file(kData + "/corpus/" + name + ".lind");
    for (std::size_t i = 0; i < file.formulas.size(); ++i) {
      const auto& phi = file.formulas[i];
      auto fv = free_vars(*phi);
      auto rec = compile(phi, file.sigma, {fv.begin(), fv.end()}, file.rank);
      auto rep = check_equivalence(*phi, *rec, 4);
      ++formulas;
      checked += rep.checked;
      mismatches += rep.mismatch_count;
      if (!rep.ok() && first.empty()) first = std::string(name) + ": " + file.sources[i] + " on " + rep.mismatches[0].tree;
    }
  }
  Outcome o{formulas >= 25 && mismatches == 0, std::to_string(formulas) + " formulas, " + std::to_string(checked) +
                                                    " (tree, interpretation) pairs, " + std::to_string(mismatches) +
                                                    " mismatches"};
  if (!first.empty()) o.detail += "; first: " + first;
  return o;
}

// ---------------------------------------------------------------- 5, 6, 7

Value random_block(const BlockAlgebra& a, int n, std::mt19937_64& rng) {
  BlockElement e;
  e.rank = n;
  e.f = static_cast<std::uint32_t>(rng() % a.t().sort_size(n));
  for (std::size_t i = 0; i < a.contexts(n).size(); ++i)
    e.F.push_back(static_cast<std::uint32_t>(rng() % a.s().sort_size(n)));
  return e.to_value();
}

std::vector<int> random_ranks(int width, int maxTotal, std::mt19937_64& rng) {
  std::vector<int> out;
  int left = maxTotal;
  for (int i = 0; i < width; ++i) {
    int r = static_cast<int>(rng() % static_cast<std::uint64_t>(left + 1));
    out.push_back(r);
    left -= r;
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

int total_rank(const std::vector<Value>& g) {
  int s = 0;
  for (const auto& x : g) s += x.rank;
  return s;
}

// (f·g)·h = f·(g·h) with h split along g.
bool associative_on(const Algebra& a, const Value& f, const std::vector<Value>& g, const std::vector<Value>& h) {
  Value left = compose_values(a, compose_values(a, f, g), h);
  std::vector<Value> gh;
  std::size_t off = 0;
  for (const auto& gi : g) {
    std::vector<Value> part(h.begin() + static_cast<std::ptrdiff_t>(off),
                            h.begin() + static_cast<std::ptrdiff_t>(off) + gi.rank);
    off += static_cast<std::size_t>(gi.rank);
    gh.push_back(compose_values(a, gi, part));
  }
  return left == compose_values(a, f, gh);
}

Outcome block_product_laws() {
  auto s = t_exists(3);
  std::size_t unitChecks = 0, triples = 0, bad = 0;
  for (int k : {0, 1}) {
    BlockAlgebra alg(s.preclone, s.preclone, k);
    Value unit{1, alg.unit()};
    for (const auto& x : block_generators(alg, s, s)) {
      unitChecks += 2;
      if (!(compose_values(alg, unit, std::vector<Value>{x}) == x)) ++bad;
      if (!(compose_values(alg, x, std::vector<Value>(static_cast<std::size_t>(x.rank), unit)) == x)) ++bad;
    }
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(k));
    int R = alg.truncation();
    for (int i = 0; i < 1000; ++i) {
      int n = static_cast<int>(rng() % static_cast<std::uint64_t>(R + 1));
      Value f = random_block(alg, n, rng);
      std::vector<Value> g, h;
      for (int r : random_ranks(n, R, rng)) g.push_back(random_block(alg, r, rng));
      for (int r : random_ranks(total_rank(g), R, rng)) h.push_back(random_block(alg, r, rng));
      ++triples;
      if (!associative_on(alg, f, g, h)) ++bad;
    }
  }
  return {bad == 0, std::to_string(unitChecks) + " unit-law checks on generators, " + std::to_string(triples) +
                        " associativity triples, " + std::to_string(bad) + " violations"};
}

Outcome prop_tree() {
  auto s = t_exists(3).preclone;
  auto d = boolean_alphabet(*sigma_ex());
  BlockAlgebra alg(s, s, 1);
  std::vector<std::vector<Value>> gammas;
  // the letters' own Boolean functions in both components
  auto natural = [&](int n, bool one) {
    if (one) return named(*s, n, "true_" + std::to_string(n));
    return named(*s, n, n == 0 ? "false_0" : "or_" + std::to_string(n));
  };
  {
    std::vector<Value> g;
    for (int l = 0; l < static_cast<int>(d->size()); ++l) {
      int n = (*d)[l].arity;
      bool one = (*d)[l].name[0] == '1';
      BlockElement e{n, natural(n, one).index, {}};
      e.F.assign(alg.contexts(n).size(), natural(n, one).index);
      g.push_back(e.to_value());
    }
    gammas.push_back(g);
  }
  // F alternates with the parity of the context index
  {
    std::vector<Value> g;
    for (int l = 0; l < static_cast<int>(d->size()); ++l) {
      int n = (*d)[l].arity;
      bool one = (*d)[l].name[0] == '1';
      BlockElement e{n, natural(n, one).index, {}};
      for (std::size_t c = 0; c < alg.contexts(n).size(); ++c) e.F.push_back(natural(n, (c % 2 == 0) == one).index);
      g.push_back(e.to_value());
    }
    gammas.push_back(g);
  }
  // F reads the context's top element: true when u is a constant
  {
    std::vector<Value> g;
    for (int l = 0; l < static_cast<int>(d->size()); ++l) {
      int n = (*d)[l].arity;
      bool one = (*d)[l].name[0] == '1';
      BlockElement e{n, natural(n, !one).index, {}};
      const auto& I = alg.contexts(n);
      for (std::size_t c = 0; c < I.size(); ++c)
        e.F.push_back(natural(n, s->describe(I[c].u).rfind("true", 0) == 0).index);
      g.push_back(e.to_value());
    }
    gammas.push_back(g);
  }
  std::vector<std::vector<RankedTree>> trees;
  for (int n = 0; n <= 2; ++n) trees.push_back(enumerate_trees(*d, n, 4));
  std::mt19937_64 rng(6);
  std::size_t checked = 0, bad = 0;
  for (const auto& gamma : gammas) {
    for (int i = 0; i < 200; ++i) {
      int n = static_cast<int>(rng() % 3);
      const auto& I = alg.contexts(n);
      const auto& t = trees[static_cast<std::size_t>(n)][rng() % trees[static_cast<std::size_t>(n)].size()];
      const auto& D = I[rng() % I.size()];
      auto [q, a] = eval_two_ways(alg, gamma, t, D);
      ++checked;
      if (!(q == a)) ++bad;
    }
  }
  return {bad == 0, std::to_string(gammas.size()) + " letter maps, " + std::to_string(checked) + " trees, " +
                        std::to_string(bad) + " mismatches"};
}

Outcome lemma_gen_block() {
  auto s = t_exists(3);
  auto source = std::make_shared<BlockAlgebra>(s.preclone, s.preclone, 1);
  auto carrier = block_product_pg(source, s, s, GeneratorSelection::All);
  const auto& C = *carrier.preclone;
  std::size_t tableChecks = 0, homChecks = 0, bad = 0;
  std::vector<std::unique_ptr<BlockAlgebra>> targets;
  for (int n = 0; n <= 2; ++n) targets.push_back(std::make_unique<BlockAlgebra>(s.preclone, s.preclone, n));
  for (int n = 0; n <= 2; ++n) {
    const BlockAlgebra& target = *targets[static_cast<std::size_t>(n)];
    Context idn{s.preclone->unit(), 0, 0, std::vector<Elem>(static_cast<std::size_t>(n), s.preclone->unit())};
    std::size_t idIndex = target.contexts(n).index_of(idn);
    const auto& I = source->contexts(n);
    for (std::size_t ci = 0; ci < I.size(); ++ci)
      for (std::uint32_t e = 0; e < C.sort_size(n); ++e) {
        Value x = C.value({n, e});
        Value y = alpha_C(*source, target, I[ci], x);
        ++tableChecks;
        if (y.key[1 + idIndex] != x.key[1 + ci]) ++bad;
      }
  }
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    int n = static_cast<int>(rng() % 3);
    const auto& I = source->contexts(n);
    const Context& ctx = I[rng() % I.size()];
    const BlockAlgebra& target = *targets[static_cast<std::size_t>(n)];
    int m = static_cast<int>(rng() % 4);
    Value f = C.value({m, static_cast<std::uint32_t>(rng() % C.sort_size(m))});
    std::vector<Value> g;
    for (int r : random_ranks(m, 3, rng)) g.push_back(C.value({r, static_cast<std::uint32_t>(rng() % C.sort_size(r))}));
    std::vector<Value> ga;
    for (const auto& x : g) ga.push_back(alpha_C(*source, target, ctx, x));
    ++homChecks;
    if (!(alpha_C(*source, target, ctx, compose_values(*source, f, g)) ==
          compose_values(target, alpha_C(*source, target, ctx, f), ga)))
      ++bad;
  }
  return {bad == 0, "carrier of " + std::to_string(C.total_size()) + " elements, " + std::to_string(tableChecks) +
                        " table checks, " + std::to_string(homChecks) + " composites, " + std::to_string(bad) +
                        " violations"};
}

// ---------------------------------------------------------------- 8

Outcome tilde_pairs() {
  AlphabetPtr sigma;
  int k = 0;
  std::size_t pairs = 0, checked = 0, bad = 0;
  std::string first;
  for (const auto& line : lines_of(kData + "/tilde_pairs.txt")) {
    std::istringstream in(line);
    std::string head;
    in >> head;
    if (head == "alphabet") {
      std::string f;
      in >> f;
      sigma = load_alphabet(f);
    } else if (head == "rank") {
      in >> k;
    } else if (head == "pair") {
      std::string over;
      in >> over;
      std::string rest;
      std::getline(in, rest);
      auto parts = split(rest, ";;");
      if (parts.size() != 2) throw Error("bad pair line: " + line);
      AlphabetPtr delta = over == "boolean" ? boolean_alphabet(*sigma) : sigma;
      LanguagePtr carrier = over == "boolean" ? automaton_language("D", builtin_K_exists(delta, k))
                                              : automaton_language("D", random_automaton(delta, k, 1, 0));
      auto fam = parse_formula("Q[D] " + parts[0], sigma, k, {{"D", carrier}});
      const Quantifier& q = *fam->q;
      auto chi = parse_formula(parts[1], delta, k);
      auto ct = tilde_substitute(chi, *delta, q.family, q.var, *sigma);
      std::set<std::string> chiFree = free_vars(*chi), famFree;
      for (const auto& m : q.family)
        for (const auto& v : free_vars(*m)) famFree.insert(v);
      famFree.erase(q.var);
      std::set<std::string> all = chiFree;
      all.insert(famFree.begin(), famFree.end());
      ++pairs;
      for (const auto& t : enumerate_trees(*sigma, k, 3))
        for_each_interpretation(t, {all.begin(), all.end()}, [&](const Interpretation& l) {
          auto bar = characteristic_tree(t, restrict(l, famFree), q);
          ++checked;
          if (satisfies(t, l, *ct) != satisfies(bar, restrict(l, chiFree), *chi)) {
            ++bad;
            if (first.empty()) first = parts[1] + " on " + t.to_string(*sigma);
          }
        });
    }
  }
  Outcome o{pairs == 10 && bad == 0, std::to_string(pairs) + " pairs, " + std::to_string(checked) + " checks, " +
                                         std::to_string(bad) + " mismatches"};
  if (!first.empty()) o.detail += "; first: " + first;
  return o;
}

// ---------------------------------------------------------------- 9

TreeAutomaton instance_language(const std::string& spec, const AlphabetPtr& alphabet, int k) {
  std::istringstream in(spec);
  std::string kind;
  in >> kind;
  if (kind == "exists") return builtin_K_exists(alphabet, k);
  if (kind == "path") return builtin_K_path(alphabet, k);
  if (kind == "forall_next") return builtin_K_forall_next(alphabet, k);
  if (kind == "mod") {
    int p = 0, r = 0;
    in >> p >> r;
    return builtin_K_mod(alphabet, k, p, r);
  }
  if (kind == "random") {
    int states = 0;
    std::uint64_t seed = 0;
    in >> states >> seed;
    return random_automaton(alphabet, k, states, seed);
  }
  throw Error("unknown language " + spec);
}

Outcome quotient_instances() {
  std::size_t instances = 0, checked = 0, bad = 0;
  std::string first;
  for (const auto& line : lines_of(kData + "/quotients.txt")) {
    auto f = split(line, ";");
    if (f.size() != 7) throw Error("bad quotient line: " + line);
    AlphabetPtr alphabet = f[0] == "boolean" ? boolean_alphabet(*sigma_ex()) : sigma_ex();
    int k = std::stoi(f[1]);
    auto a = minimize(instance_language(f[2], alphabet, k));
    auto u = parse_tree(f[3], *alphabet);
    int k1 = std::stoi(f[4]), k2 = std::stoi(f[5]);
    std::vector<RankedTree> vs;
    for (const auto& c : split(f[6], "+")) vs.push_back(parse_tree(c, *alphabet));
    TreeTuple v{vs};
    int l = k - k1 - k2, n = static_cast<int>(vs.size());
    auto fail = [&](const std::string& what) {
      ++bad;
      if (first.empty()) first = line + ": " + what;
    };
    ++instances;
    // left quotient against its definition
    auto left = left_quotient(a, u, k1, k2);
    for (const auto& t : enumerate_trees(*alphabet, l, 3)) {
      std::vector<RankedTree> outer;
      for (int i = 0; i < k1; ++i) outer.push_back(RankedTree::unit());
      outer.push_back(t);
      for (int i = 0; i < k2; ++i) outer.push_back(RankedTree::unit());
      ++checked;
      if (left.accepts(t) != a.accepts(compose(u, outer))) fail("left quotient at " + t.to_string(*alphabet));
    }
    // double quotient, and contexts in the transformation preclone
    auto both = right_quotient(left, v);
    int R = std::max({2, k + 1, u.rank(), n});
    auto tr = transformation_pgpair(a, R);
    const auto& T = *tr.pg.preclone;
    const auto& alg = static_cast<const TransformationAlgebra&>(T.algebra());
    std::vector<int> varStates;
    for (int j = 1; j <= k; ++j) varStates.push_back(a.var_state(j));
    std::vector<bool> P;
    for (std::uint32_t i = 0; i < T.sort_size(k); ++i)
      P.push_back(a.is_final(static_cast<int>(alg.apply(T.key({k, i}), varStates))));
    std::vector<Elem> vImg;
    for (const auto& c : vs) vImg.push_back(morphism_eval(tr.morphism, c));
    Context ctx{morphism_eval(tr.morphism, u), k1, k2, vImg};
    for (const auto& t : enumerate_trees(*alphabet, n, 3)) {
      std::vector<RankedTree> outer;
      for (int i = 0; i < k1; ++i) outer.push_back(RankedTree::unit());
      outer.push_back(compose(t, vs));
      for (int i = 0; i < k2; ++i) outer.push_back(RankedTree::unit());
      bool direct = a.accepts(compose(u, outer));
      ++checked;
      if (both.accepts(t) != direct) fail("double quotient at " + t.to_string(*alphabet));
      if (is_L_context(T, P, morphism_eval(tr.morphism, t), ctx) != direct)
        fail("context membership at " + t.to_string(*alphabet));
    }
  }
  Outcome o{instances == 10 && bad == 0, std::to_string(instances) + " instances, " + std::to_string(checked) +
                                             " trees, " + std::to_string(bad) + " mismatches"};
  if (!first.empty()) o.detail += "; first: " + first;
  return o;
}

// ---------------------------------------------------------------- 10

Outcome literal_morphisms() {
  AlphabetPtr target;
  int k = 0;
  std::vector<std::pair<AlphabetPtr, std::vector<int>>> maps;
  std::vector<FormulaPtr> formulas;
  for (const auto& line : lines_of(kData + "/literal_maps.txt")) {
    std::istringstream in(line);
    std::string head;
    in >> head;
    std::string rest;
    std::getline(in, rest);
    rest = trim(rest);
    if (head == "target") {
      target = load_alphabet(rest);
    } else if (head == "rank") {
      k = std::stoi(rest);
    } else if (head == "map") {
      auto sides = split(rest, "=>");
      std::string spec = sides.at(0);
      std::replace(spec.begin(), spec.end(), ' ', '\n');
      auto source = std::make_shared<const RankedAlphabet>(RankedAlphabet::parse(spec));
      std::vector<int> h(source->size(), -1);
      std::istringstream pairs(sides.at(1));
      std::string p;
      while (pairs >> p) {
        auto colon = p.find(':');
        auto from = source->find(p.substr(0, colon));
        auto to = target->find(p.substr(colon + 1));
        if (!from || !to) throw Error("bad letter map " + p);
        if ((*source)[*from].arity != (*target)[*to].arity) throw Error("letter map changes rank: " + p);
        h[static_cast<std::size_t>(*from)] = *to;
      }
      if (std::find(h.begin(), h.end(), -1) != h.end()) throw Error("incomplete letter map: " + line);
      maps.push_back({source, h});
    } else if (head == "formula") {
      formulas.push_back(parse_formula(rest, target, k));
    }
  }
  std::size_t checked = 0, bad = 0;
  for (const auto& [source, h] : maps)
    for (const auto& phi : formulas) {
      auto pre = inverse_literal_image(phi, h);
      auto fv = free_vars(*phi);
      for (const auto& t : enumerate_trees(*source, k, 3)) {
        auto image = apply_literal_morphism(t, h);
        for_each_interpretation(t, {fv.begin(), fv.end()}, [&](const Interpretation& l) {
          ++checked;
          if (satisfies(t, l, *pre) != satisfies(image, l, *phi)) ++bad;
        });
      }
    }
  return {maps.size() == 2 && formulas.size() == 5 && bad == 0,
          std::to_string(maps.size()) + " maps, " + std::to_string(formulas.size()) + " formulas, " +
              std::to_string(checked) + " checks, " + std::to_string(bad) + " mismatches"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double limit;  // seconds, 0 for none
    std::function<Outcome()> run;
  };
  std::vector<Criterion> all{
      {1, "preclone axioms", 10, preclone_axioms},
      {2, "syntactic preclone of K_0(exists)", 5, syntactic_exists},
      {3, "syntactic preclones of modular counting", 10, syntactic_mod},
      {4, "compiled recognizers match the semantics", 120, corpus_equivalence},
      {5, "block product unit and associativity", 30, block_product_laws},
      {6, "relabeled-tree evaluation", 0, prop_tree},
      {7, "alpha^C tables and homomorphism", 0, lemma_gen_block},
      {8, "tilde substitution", 0, tilde_pairs},
      {9, "quotients and contexts", 0, quotient_instances},
      {10, "inverse literal morphisms", 0, literal_morphisms},
  };
  int failed = 0;
  for (const auto& c : all) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool late = c.limit > 0 && secs > c.limit;
    bool ok = o.ok && !late;
    if (!ok) ++failed;
    std::printf("%s criterion %d: %s: %s (%.2f s%s)\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs,
                late ? ", over the time limit" : "");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
