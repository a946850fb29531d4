#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lind/automata.hpp"
#include "lind/trees.hpp"

namespace lind {

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// A tree language K over Δ of rank k, given by an automaton or by a
// defining sentence over Δ (or both).
struct Language {
  std::string name;
  AlphabetPtr delta;
  int rank = 0;
  std::shared_ptr<const TreeAutomaton> automaton;
  FormulaPtr definition;

  bool contains(const RankedTree& t) const;
};

using LanguagePtr = std::shared_ptr<const Language>;

LanguagePtr automaton_language(std::string name, TreeAutomaton a);

// Q_K x ⟨φ_δ⟩; family indexed by the symbol ids of lang->delta.
struct Quantifier {
  LanguagePtr lang;
  std::string var;
  std::vector<FormulaPtr> family;
  // "exists" / "mod p r" when produced from sugar; body is then φ.
  std::string sugar;
  FormulaPtr body;
};

enum class Kind { True, False, Label, Less, Succ, Root, Max, Left, Right, Not, And, Or, Quant };

struct Formula {
  Kind kind = Kind::True;
  int symbol = -1;  // Label
  int i = 0;        // Succ, Max
  int j = 0;        // Max, Left, Right
  std::string x, y;
  std::vector<FormulaPtr> args;  // Not: 1, And/Or: 2
  std::shared_ptr<const Quantifier> q;
};

FormulaPtr f_true();
FormulaPtr f_false();
FormulaPtr f_label(int symbol, std::string x);
FormulaPtr f_less(std::string x, std::string y);
FormulaPtr f_succ(int i, std::string x, std::string y);
FormulaPtr f_root(std::string x);
FormulaPtr f_max(int i, int j, std::string x);
FormulaPtr f_left(int j, std::string x);
FormulaPtr f_right(int j, std::string x);
FormulaPtr f_not(FormulaPtr a);
FormulaPtr f_and(FormulaPtr a, FormulaPtr b);
FormulaPtr f_or(FormulaPtr a, FormulaPtr b);
FormulaPtr f_quant(LanguagePtr lang, std::string var, std::vector<FormulaPtr> family, std::string sugar = {},
                   FormulaPtr body = nullptr);

// exists / mod sugar: Q over K_k(∃) (resp. K_k(∃^r_p)) on the Boolean
// alphabet of Σ with family φ_{1_n} = φ, φ_{0_n} = ¬φ.
FormulaPtr desugar_exists(const std::string& x, FormulaPtr phi, const AlphabetPtr& sigma, int k);
FormulaPtr desugar_mod(int p, int r, const std::string& x, FormulaPtr phi, const AlphabetPtr& sigma, int k);
// Boolean family from one formula: 1_n -> φ, 0_n -> ¬φ.
std::vector<FormulaPtr> boolean_family(const RankedAlphabet& delta, FormulaPtr phi);

std::set<std::string> free_vars(const Formula& f);
std::set<std::string> all_vars(const Formula& f);
bool is_atomic(const Formula& f);

std::string to_string(const Formula& f, const RankedAlphabet& sigma);

// ---------------------------------------------------------------- semantics

// Variables map to preorder indices of non-variable nodes.
using Interpretation = std::map<std::string, std::size_t>;

bool satisfies(const RankedTree& t, const Interpretation& lambda, const Formula& phi);

// t̄_λ: same shape, each NV node relabelled by the unique δ of its rank whose
// formula holds with x at that node. Throws DeterminismViolation.
RankedTree characteristic_tree(const RankedTree& t, const Interpretation& lambda, const Quantifier& q);

struct DeterminismWitness {
  RankedTree tree;
  Interpretation lambda;
  std::size_t node = 0;
  std::vector<int> satisfied;  // δ ids of the node's rank that hold
};

// Exhaustive over trees of rank k with NV <= maxNV, interpretations of the
// other free variables and positions of x.
std::optional<DeterminismWitness> check_deterministic(const RankedAlphabet& delta, const std::vector<FormulaPtr>& family,
                                                      const std::string& x, const AlphabetPtr& sigma, int k, int maxNV);

// Calls fn for every map vars -> NV(t).
void for_each_interpretation(const RankedTree& t, const std::vector<std::string>& vars,
                             const std::function<void(const Interpretation&)>& fn);

// ---------------------------------------------------------------- structures

// Σ_Z: letter (σ, Z') has id σ * 2^|Z| + mask(Z'); with Z empty the ids are
// those of Σ. Names are `σ` or `σ{z1,z2}`.
class ExtendedAlphabet {
 public:
  ExtendedAlphabet(AlphabetPtr base, std::vector<std::string> vars);

  const AlphabetPtr& base() const { return base_; }
  const AlphabetPtr& alphabet() const { return alphabet_; }
  const std::vector<std::string>& vars() const { return vars_; }
  int var_index(const std::string& z) const;  // -1 if absent
  int letter(int symbol, std::uint32_t mask) const { return symbol * (1 << vars_.size()) + static_cast<int>(mask); }
  int symbol_of(int letter) const { return letter >> vars_.size(); }
  std::uint32_t mask_of(int letter) const { return static_cast<std::uint32_t>(letter) & ((1u << vars_.size()) - 1); }

 private:
  AlphabetPtr base_, alphabet_;
  std::vector<std::string> vars_;
};

using ExtendedAlphabetPtr = std::shared_ptr<const ExtendedAlphabet>;

RankedTree mk_structure(const ExtendedAlphabet& z, const RankedTree& t, const Interpretation& lambda);
// Inverse of mk_structure; throws unless each variable occurs exactly once.
std::pair<RankedTree, Interpretation> destructure(const ExtendedAlphabet& z, const RankedTree& s);

// ---------------------------------------------------------------- rewriting

// χ[q/p], renaming bound occurrences of q.
FormulaPtr substitute_var(const FormulaPtr& chi, const std::string& q, const std::string& p);
// χ̃: every P_δ(z) replaced by φ_δ[z/x], guarded by "z has rank |δ|" when
// Σ has letters of several ranks.
FormulaPtr tilde_substitute(const FormulaPtr& chi, const RankedAlphabet& delta, const std::vector<FormulaPtr>& family,
                            const std::string& x, const RankedAlphabet& sigma);
// φ' over Σ' for a rank-preserving h: Σ' -> Σ given by symbol ids.
FormulaPtr inverse_literal_image(const FormulaPtr& phi, const std::vector<int>& h);
RankedTree apply_literal_morphism(const RankedTree& t, const std::vector<int>& h);

// ---------------------------------------------------------------- parsing

using LanguageTable = std::map<std::string, LanguagePtr>;

FormulaPtr parse_formula(std::string_view text, const AlphabetPtr& sigma, int k, const LanguageTable& langs = {});

struct FormulaFile {
  AlphabetPtr sigma;
  int rank = 0;
  LanguageTable languages;
  std::vector<std::string> sources;
  std::vector<FormulaPtr> formulas;
};

// Header lines: `alphabet <file> | alphabet inline f/2 a/0`, `rank k`,
// `lang N = <file.aut> | builtin exists|path|forall_next|mod p r`,
// `deflang N over boolean|<file> : sentence`; then `formula φ` lines.
FormulaFile parse_formula_file(std::string_view text, const std::string& baseDir = ".");
FormulaFile load_formula_file(const std::string& path);

}  // namespace lind
