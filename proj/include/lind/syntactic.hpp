#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lind/preclone.hpp"

namespace lind {

// (u, k1, v, k2): u of rank k1+1+k2, v of width n and total rank k-k1-k2.
struct Context {
  Elem u;
  int k1 = 0;
  int k2 = 0;
  std::vector<Elem> v;
  friend bool operator==(const Context&, const Context&) = default;
};

Key context_key(const Context& c);
std::string describe_context(const FinitaryPreclone& t, const Context& c);

// The contexts I_{k,n} over a materialized preclone, in a fixed order:
// by (k1, k2), then u, then v in tuple enumeration order.
class ContextTable {
 public:
  ContextTable(const FinitaryPreclone& t, int k, int n);

  int k() const { return k_; }
  int n() const { return n_; }
  std::size_t size() const { return contexts_.size(); }
  const Context& operator[](std::size_t i) const { return contexts_[i]; }
  const std::vector<Context>& contexts() const { return contexts_; }
  std::optional<std::size_t> find(const Context& c) const;
  std::size_t index_of(const Context& c) const;  // throws if absent

 private:
  int k_, n_;
  std::vector<Context> contexts_;
  std::unordered_map<Key, std::uint32_t, KeyHash> index_;
};

std::vector<Context> enumerate_contexts(const FinitaryPreclone& t, int k, int n);

// u·(k1 ⊕ f·v ⊕ k2), of rank k.
Elem apply_context(const FinitaryPreclone& t, Elem f, const Context& c);

// `accepting` is indexed by the rank-k elements of t.
bool is_L_context(const FinitaryPreclone& t, const std::vector<bool>& accepting, Elem f, const Context& c);

using CongruenceClasses = std::vector<std::vector<std::uint32_t>>;

CongruenceClasses syntactic_congruence(const FinitaryPreclone& t, int k, const std::vector<bool>& accepting);

struct SyntacticResult {
  PgPair pg;
  Morphism morphism;              // Σ -> syntactic preclone
  std::vector<bool> accepting;    // per rank-k element of the syntactic preclone
  TransformationResult transformation;  // of the minimal automaton
  PrecloneMap projection;         // transformation preclone -> syntactic preclone
  int rank = 0;

  bool accepts(const RankedTree& t) const;
  std::vector<std::size_t> class_counts() const;
};

SyntacticResult syntactic_pgpair(const TreeAutomaton& a, int R, std::size_t budget = kDefaultBudget);

}  // namespace lind
