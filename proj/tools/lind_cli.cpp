// lind: command-line front end.
// Exit codes: 0 success / SAT / PASS, 1 negative verdict, 2 input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lind/compile.hpp"

using namespace lind;

namespace {

struct Config {
  std::vector<std::string> inputs;
  int rank = -1;
  int trunc = 0;
  int maxNV = 4;
  std::uint64_t seed = 1;
  std::size_t budget = kDefaultBudget;
  std::string out;
  std::string alphabet;
  bool boolean = false;
  int k = 0;
  std::string generators;
  std::size_t samples = 0;
  std::vector<std::string> assign;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

void emit(const Config& c, const std::string& text) {
  if (c.out.empty())
    std::cout << text;
  else
    write_file(c.out, text);
}

Interpretation parse_assign(const std::vector<std::string>& items) {
  Interpretation l;
  for (const auto& a : items) {
    auto eq = a.find('=');
    if (eq == std::string::npos) throw ParseError("expected var=node, got '" + a + "'");
    try {
      l[a.substr(0, eq)] = std::stoul(a.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw ParseError("bad node index in '" + a + "'");
    }
  }
  return l;
}

AlphabetPtr alphabet_of(const Config& c) {
  AlphabetPtr a = c.alphabet.empty() ? sigma_ex()
                                     : std::make_shared<const RankedAlphabet>(RankedAlphabet::load(c.alphabet));
  return c.boolean ? boolean_alphabet(*a) : a;
}

// ---------------------------------------------------------------- commands

int cmd_eval(const Config& c) {
  auto file = load_formula_file(c.inputs.at(1));
  auto lambda = parse_assign(c.assign);
  std::istringstream trees(slurp(c.inputs.at(0)));
  std::string line;
  bool all = true;
  int lineno = 0;
  while (std::getline(trees, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    RankedTree t;
    try {
      t = parse_tree(line, *file.sigma, file.rank);
    } catch (const ParseError& e) {
      throw ParseError("tree line " + std::to_string(lineno) + ": " + e.what());
    }
    for (std::size_t i = 0; i < file.formulas.size(); ++i) {
      for (const auto& v : free_vars(*file.formulas[i]))
        if (!lambda.count(v)) throw Error("free variable " + v + " needs --assign " + v + "=<node>");
      for (const auto& [v, node] : lambda)
        if (node >= t.size()) throw Error("node " + std::to_string(node) + " for " + v + " is out of range");
      bool sat = satisfies(t, lambda, *file.formulas[i]);
      all = all && sat;
      std::cout << (sat ? "SAT" : "UNSAT");
      if (file.formulas.size() > 1) std::cout << " " << file.sources[i];
      std::cout << "\n";
    }
  }
  return all ? 0 : 1;
}

CompileOptions options_of(const Config& c) {
  CompileOptions o;
  o.truncation = c.trunc;
  o.budget = c.budget;
  return o;
}

int cmd_compile(const Config& c) {
  auto file = load_formula_file(c.inputs.at(0));
  if (c.out.empty()) throw Error("compile needs --out <dir>");
  std::filesystem::create_directories(c.out);
  for (std::size_t i = 0; i < file.formulas.size(); ++i) {
    const auto& phi = file.formulas[i];
    auto fv = free_vars(*phi);
    auto rec = compile(phi, file.sigma, {fv.begin(), fv.end()}, file.rank, options_of(c));
    auto m = materialize(*rec, c.budget);
    std::string base = "formula_" + std::to_string(i + 1);
    write_file(std::filesystem::path(c.out) / (base + ".dump"), dump_preclone({m.preclone, m.generators}));
    std::ostringstream gens, acc;
    const auto& z = *rec->alphabet->alphabet();
    gens << "# " << file.sources[i] << "\n";
    for (std::size_t l = 0; l < z.size(); ++l)
      gens << z[static_cast<int>(l)].name << " -> " << m.generators[l].rank << ":" << m.generators[l].index << "\n";
    acc << "rank " << rec->rank << "\naccept";
    for (std::uint32_t e = 0; e < m.preclone->sort_size(rec->rank); ++e)
      if (rec->accepting(m.preclone->value({rec->rank, e}))) acc << " " << e;
    acc << "\n";
    write_file(std::filesystem::path(c.out) / (base + ".gens"), gens.str());
    write_file(std::filesystem::path(c.out) / (base + ".accept"), acc.str());
    std::cout << base << " " << rec->kind << " carrier " << m.preclone->total_size() << " : " << file.sources[i] << "\n";
  }
  return 0;
}

int cmd_check(const Config& c) {
  auto file = load_formula_file(c.inputs.at(0));
  bool all = true;
  for (std::size_t i = 0; i < file.formulas.size(); ++i) {
    const auto& phi = file.formulas[i];
    auto fv = free_vars(*phi);
    auto rec = compile(phi, file.sigma, {fv.begin(), fv.end()}, file.rank, options_of(c));
    auto rep = check_equivalence(*phi, *rec, c.maxNV, 1);
    all = all && rep.ok();
    std::cout << (rep.ok() ? "PASS " : "FAIL ") << file.sources[i] << " (" << rep.checked << " checked, "
              << rep.mismatch_count << " mismatches)\n";
    if (!rep.ok()) {
      const auto& w = rep.mismatches.front();
      std::cout << "  witness " << w.tree;
      for (const auto& [v, n] : w.lambda) std::cout << " " << v << "=" << n;
      std::cout << " expected " << (w.expected ? "accept" : "reject") << "\n";
    }
  }
  return all ? 0 : 1;
}

int cmd_syntactic(const Config& c) {
  AlphabetPtr alphabet = c.alphabet.empty() ? nullptr : alphabet_of(c);
  auto a = TreeAutomaton::load(c.inputs.at(0), alphabet);
  if (c.rank >= 0 && c.rank != a.rank()) throw Error("automaton has rank " + std::to_string(a.rank()));
  int R = c.trunc ? c.trunc : default_truncation(*a.alphabet(), a.rank());
  if (R < a.rank() + 1) throw Error("--trunc must be at least rank+1");
  auto res = syntactic_pgpair(a, R, c.budget);
  std::ostringstream out;
  out << dump_preclone(res.pg);
  out << "accept";
  for (std::size_t i = 0; i < res.accepting.size(); ++i)
    if (res.accepting[i]) out << " " << i;
  out << "\nclasses";
  for (auto n : res.class_counts()) out << " " << n;
  out << "\n";
  emit(c, out.str());
  return 0;
}

// Generator lines: `n f : F0 F1 ...`
std::vector<Value> parse_block_generators(const std::string& text, const BlockAlgebra& alg) {
  std::vector<Value> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ws(line);
    BlockElement e;
    std::string colon;
    if (!(ws >> e.rank >> e.f >> colon) || colon != ":")
      throw ParseError("generators line " + std::to_string(lineno) + ": expected `n f : F...`");
    std::uint32_t x;
    while (ws >> x) e.F.push_back(x);
    if (e.rank < 0 || e.rank > alg.truncation() || e.f >= alg.t().sort_size(e.rank))
      throw ParseError("generators line " + std::to_string(lineno) + ": element does not fit S □_k T");
    if (e.F.size() != alg.contexts(e.rank).size())
      throw ParseError("generators line " + std::to_string(lineno) + ": F needs " +
                       std::to_string(alg.contexts(e.rank).size()) + " entries");
    for (auto v : e.F)
      if (v >= alg.s().sort_size(e.rank)) throw ParseError("generators line " + std::to_string(lineno) + ": F out of range");
    out.push_back(e.to_value());
  }
  return out;
}

int cmd_blockprod(const Config& c) {
  auto s = parse_dump(slurp(c.inputs.at(0)));
  auto t = parse_dump(slurp(c.inputs.at(1)));
  auto alg = std::make_shared<BlockAlgebra>(s.preclone, t.preclone, c.k);
  PgPair pg;
  if (c.generators.empty()) {
    pg = block_product_pg(alg, s, t, GeneratorSelection::All, {}, c.budget);
  } else {
    auto gens = parse_block_generators(slurp(c.generators), *alg);
    pg = block_product_pg(alg, s, t, GeneratorSelection::Subset, gens, c.budget);
  }
  std::ostringstream out;
  out << dump_preclone(pg);
  for (int n = 0; n <= pg.preclone->truncation(); ++n) out << "carrier " << n << " " << pg.preclone->sort_size(n) << "\n";
  emit(c, out.str());
  return 0;
}

int cmd_enumerate(const Config& c) {
  auto a = alphabet_of(c);
  int k = c.rank < 0 ? 0 : c.rank;
  auto trees = enumerate_trees(*a, k, c.maxNV);
  std::ostringstream out;
  for (const auto& t : trees) out << t.to_string(*a) << "\n";
  out << "count " << trees.size() << "\n";
  emit(c, out.str());
  return 0;
}

// Builtins: exists, mod:p, random:states (seeded), or a dump file.
PgPair axioms_target(const Config& c, const std::string& what) {
  int R = c.trunc ? c.trunc : 3;
  if (what == "exists") return t_exists(R);
  if (what.rfind("mod:", 0) == 0) return t_mod(std::stoi(what.substr(4)), R);
  if (what.rfind("random:", 0) == 0) {
    int k = c.rank < 0 ? 1 : c.rank;
    auto a = random_automaton(alphabet_of(c), k, std::stoi(what.substr(7)), c.seed);
    return transformation_pgpair(a, c.trunc ? c.trunc : std::max(2, k + 1), c.budget).pg;
  }
  return parse_dump(slurp(what));
}

int cmd_axioms(const Config& c) {
  bool ok = true;
  std::cout << "seed " << c.seed << "\n";
  for (const auto& what : c.inputs) {
    auto pg = axioms_target(c, what);
    AxiomMode mode;
    if (c.samples) {
      mode.exhaustive = false;
      mode.samples = c.samples;
      mode.seed = c.seed;
    }
    auto rep = check_axioms(*pg.preclone, mode);
    ok = ok && rep.ok();
    std::cout << (rep.ok() ? "PASS " : "FAIL ") << what << " (" << pg.preclone->total_size() << " elements, " << rep.checked
              << " checks, " << rep.violations.size() << " violations)\n";
    for (const auto& v : rep.violations) std::cout << "  " << v << "\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preclones, block products and Lindström quantifiers on ranked trees"};
  app.require_subcommand(1);
  Config c;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--rank", c.rank, "rank k of the trees");
    sub->add_option("--trunc", c.trunc, "truncation R (0: default)");
    sub->add_option("--max-nv", c.maxNV, "largest number of non-variable nodes")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "seed for randomized steps");
    sub->add_option("--budget", c.budget, "element budget for closures");
    sub->add_option("--out", c.out, "output file or directory");
  };
  auto* eval = app.add_subcommand("eval", "evaluate formulas on trees: SAT or UNSAT");
  eval->add_option("trees", c.inputs, "tree file, then formula file")->required()->expected(2);
  eval->add_option("--assign", c.assign, "var=node for free variables (preorder index)");
  common(eval);
  auto* comp = app.add_subcommand("compile", "compile formulas to block-product recognizers");
  comp->add_option("formulas", c.inputs)->required()->expected(1);
  common(comp);
  auto* check = app.add_subcommand("check-equiv", "compare compiled recognizers with the semantics");
  check->add_option("formulas", c.inputs)->required()->expected(1);
  common(check);
  auto* syn = app.add_subcommand("syntactic", "syntactic preclone of an automaton's language");
  syn->add_option("automaton", c.inputs)->required()->expected(1);
  syn->add_option("--alphabet", c.alphabet, "alphabet file (default: from the transitions)");
  common(syn);
  auto* bp = app.add_subcommand("blockprod", "block product S □_k T of two dumped pg-pairs");
  bp->add_option("dumps", c.inputs, "S dump, then T dump")->required()->expected(2);
  bp->add_option("--k", c.k, "block product index k");
  bp->add_option("--generators", c.generators, "generator subset, lines `n f : F0 F1 ...`");
  common(bp);
  auto* en = app.add_subcommand("enumerate", "list trees of rank k up to --max-nv nodes");
  en->add_option("--alphabet", c.alphabet, "alphabet file (default f/2 a/0 b/0)");
  en->add_flag("--boolean", c.boolean, "use the Boolean alphabet over it");
  common(en);
  auto* ax = app.add_subcommand("axioms", "check the preclone axioms");
  ax->add_option("targets", c.inputs, "exists | mod:p | random:states | dump file")->required();
  ax->add_option("--alphabet", c.alphabet, "alphabet for random automata (default f/2 a/0 b/0)");
  ax->add_option("--samples", c.samples, "sample this many instances instead of exhausting");
  common(ax);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*eval) return cmd_eval(c);
    if (*comp) return cmd_compile(c);
    if (*check) return cmd_check(c);
    if (*syn) return cmd_syntactic(c);
    if (*bp) return cmd_blockprod(c);
    if (*en) return cmd_enumerate(c);
    if (*ax) return cmd_axioms(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
