#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lind/blockprod.hpp"
#include "lind/logic.hpp"
#include "lind/preclone.hpp"
#include "lind/syntactic.hpp"

namespace lind {

// Pieces of a Q_K x ⟨φ_δ⟩ compilation, kept for inspection.
struct QuantifierParts {
  SyntacticResult s;             // (S, A), κ and α(K)
  TransformationResult t;        // (T, B) and τ over Σ_{Y∪{x}}
  ExtendedAlphabetPtr inner;     // Σ_{Y∪{x}}
  BlockAlgebraPtr block;         // S □_k T
  // accepted[δ][i]: rank-k element i of T lies in τ(L_{φ_δ})
  std::vector<std::vector<bool>> accepted;
  // valid[n][i]: rank-k element i of T is the image of a Y∪{x}-structure
  // whose x-node has rank n
  std::vector<std::vector<bool>> valid;
};

// A value-level recognizer: a preclone algebra, the images of the letters
// of Σ_Y, and the accepting set on rank-k values.
struct CompiledRecognizer {
  AlgebraPtr algebra;
  ExtendedAlphabetPtr alphabet;
  std::vector<Value> gamma;  // per letter of Σ_Y
  std::function<bool(const Value&)> accepting;
  int rank = 0;
  int truncation = 0;
  std::string kind;  // atom, not, and, or, quantifier
  std::shared_ptr<const QuantifierParts> quant;

  const std::vector<std::string>& vars() const { return alphabet->vars(); }
  Value evaluate(const RankedTree& structure) const;
};

using RecognizerPtr = std::shared_ptr<const CompiledRecognizer>;

struct CompileOptions {
  int truncation = 0;  // 0: max(k+1, max arity of Σ)
  std::size_t budget = kDefaultBudget;
};

int default_truncation(const RankedAlphabet& sigma, int k);

RecognizerPtr compile_atomic(const Formula& phi, const AlphabetPtr& sigma, const std::vector<std::string>& vars, int k,
                             int R);
// vars must contain free(φ); the recognizer works on Σ_vars-structures.
RecognizerPtr compile(const FormulaPtr& phi, const AlphabetPtr& sigma, const std::vector<std::string>& vars, int k,
                      const CompileOptions& options = {});

bool membership(const CompiledRecognizer& rec, const RankedTree& t, const Interpretation& lambda);
bool membership_structure(const CompiledRecognizer& rec, const RankedTree& structure);

// Minimal automaton over Σ_Y deciding the same language.
TreeAutomaton recognizer_automaton(const CompiledRecognizer& rec, std::size_t budget = 200000);

// Materializes the carrier generated by the letter images.
ClosureResult materialize(const CompiledRecognizer& rec, std::size_t budget = kDefaultBudget);

struct Mismatch {
  std::string tree;
  Interpretation lambda;
  bool expected = false;
};

struct EquivalenceReport {
  std::size_t checked = 0;
  std::size_t accepted = 0;
  std::size_t mismatch_count = 0;
  std::vector<Mismatch> mismatches;  // first few
  bool ok() const { return mismatch_count == 0; }
};

// satisfies vs membership over every tree of rank k with NV <= maxNV and
// every interpretation of the recognizer's variables.
EquivalenceReport check_equivalence(const Formula& phi, const CompiledRecognizer& rec, int maxNV,
                                    std::size_t keep = 20);

// Automaton for a defined language, through compilation of its sentence.
LanguagePtr language_via_automaton(const Language& lang, const CompileOptions& options = {});

}  // namespace lind
