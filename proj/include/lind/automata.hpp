#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lind/trees.hpp"

namespace lind {

// Deterministic complete bottom-up automaton for a rank-k language.
// Variable leaf v_j evaluates to var_state(j).
class TreeAutomaton {
 public:
  TreeAutomaton(AlphabetPtr alphabet, int rank, int states);

  const AlphabetPtr& alphabet() const { return alphabet_; }
  int rank() const { return rank_; }
  int states() const { return states_; }

  int var_state(int j) const { return var_state_.at(static_cast<std::size_t>(j - 1)); }
  void set_var_state(int j, int q);
  bool is_final(int q) const { return final_[static_cast<std::size_t>(q)]; }
  void set_final(int q, bool v = true) { final_[static_cast<std::size_t>(q)] = v; }
  std::vector<int> finals() const;

  int step(int symbol, std::span<const int> children) const;
  void set_step(int symbol, std::span<const int> children, int q);
  // Direct access to the transition table of a symbol; entries indexed in
  // mixed radix with the first child most significant.
  const std::vector<int>& table(int symbol) const { return trans_[static_cast<std::size_t>(symbol)]; }

  int run(const RankedTree& t) const;
  bool accepts(const RankedTree& t) const;

  // Line-based text format.
  std::string to_text() const;
  static TreeAutomaton parse(std::string_view text, AlphabetPtr alphabet);
  // Alphabet inferred from the transition lines, in order of first use.
  static TreeAutomaton parse(std::string_view text);
  static TreeAutomaton load(const std::string& path, AlphabetPtr alphabet = nullptr);

 private:
  std::size_t offset(int symbol, std::span<const int> children) const;

  AlphabetPtr alphabet_;
  int rank_;
  int states_;
  std::vector<int> var_state_;
  std::vector<std::vector<int>> trans_;
  std::vector<bool> final_;
};

TreeAutomaton complement(const TreeAutomaton& a);
TreeAutomaton intersect(const TreeAutomaton& a, const TreeAutomaton& b);
TreeAutomaton unite(const TreeAutomaton& a, const TreeAutomaton& b);

TreeAutomaton minimize(const TreeAutomaton& a);
// Minimization that keeps states apart unless they share a color; used when
// several languages are decided by one automaton. Finals of the result are
// the states whose color is in `final_colors` (colors given per state).
struct ColoredAutomaton {
  TreeAutomaton automaton;
  std::vector<int> color;  // per state of the result
};
ColoredAutomaton minimize_colored(const TreeAutomaton& a, const std::vector<int>& color);

// Generic reachability builder: states are discovered from the variable
// states and by applying `step` to tuples of known states.
struct BuilderSpec {
  using Key = std::vector<std::int64_t>;
  std::function<Key(int j)> var_key;
  std::function<Key(int symbol, std::span<const Key* const> children)> step;
  std::function<bool(const Key&)> is_final;
};
struct BuiltAutomaton {
  TreeAutomaton automaton;
  std::vector<BuilderSpec::Key> keys;  // key of each state
};
BuiltAutomaton build_automaton(AlphabetPtr alphabet, int rank, const BuilderSpec& spec, std::size_t budget = 200000);

TreeAutomaton left_quotient(const TreeAutomaton& a, const RankedTree& u, int k1, int k2);
TreeAutomaton right_quotient(const TreeAutomaton& a, const TreeTuple& v);

TreeAutomaton builtin_K_exists(AlphabetPtr delta, int k);
TreeAutomaton builtin_K_mod(AlphabetPtr delta, int k, int p, int r);
TreeAutomaton builtin_K_path(AlphabetPtr delta, int k);
TreeAutomaton builtin_K_forall_next(AlphabetPtr delta, int k);

// Seeded random complete automaton (for tests and the axioms command).
TreeAutomaton random_automaton(AlphabetPtr alphabet, int rank, int states, std::uint64_t seed);

}  // namespace lind
