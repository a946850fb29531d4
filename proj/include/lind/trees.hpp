#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lind/errors.hpp"

namespace lind {

struct Symbol {
  std::string name;
  int arity = 0;
};

class RankedAlphabet {
 public:
  explicit RankedAlphabet(std::vector<Symbol> symbols);

  // One `name/arity` per line; blank lines and `#` comments ignored.
  static RankedAlphabet parse(std::string_view text);
  static RankedAlphabet load(const std::string& path);

  std::size_t size() const { return symbols_.size(); }
  const Symbol& operator[](int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  const std::vector<Symbol>& symbols() const { return symbols_; }
  std::optional<int> find(std::string_view name) const;
  int max_arity() const { return max_arity_; }
  bool has_arity(int n) const;
  std::vector<int> symbols_of_arity(int n) const;
  std::string to_string() const;

  friend bool operator==(const RankedAlphabet& a, const RankedAlphabet& b);

 private:
  std::vector<Symbol> symbols_;
  int max_arity_ = 0;
};

using AlphabetPtr = std::shared_ptr<const RankedAlphabet>;

// The example alphabet {f/2, a/0, b/0}.
AlphabetPtr sigma_ex();

// Boolean alphabet with letters 0_n, 1_n for each rank n where `sigma` has
// a symbol. Letters are ordered by rank, 0_n before 1_n.
AlphabetPtr boolean_alphabet(const RankedAlphabet& sigma);
bool is_boolean_alphabet(const RankedAlphabet& delta);

// Trees are stored in preorder. A node label >= 0 is a symbol id; label
// kVar marks a variable leaf. Variables are numbered implicitly by their
// left-to-right order, so the frontier invariant holds by construction.
class RankedTree {
 public:
  static constexpr int kVar = -1;
  struct Node {
    int label = kVar;
    int arity = 0;
    friend bool operator==(const Node&, const Node&) = default;
  };

  RankedTree();  // the unit tree 𝟏
  static RankedTree unit() { return RankedTree(); }
  static RankedTree leaf(int symbol);
  // σ(children...), arity taken from the child count.
  static RankedTree make(int symbol, std::span<const RankedTree> children);
  static RankedTree from_nodes(std::vector<Node> nodes);

  int rank() const { return rank_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  bool is_unit() const { return nodes_.size() == 1 && nodes_[0].label == kVar; }
  bool is_var(std::size_t i) const { return nodes_[i].label == kVar; }
  std::size_t nv_count() const { return nodes_.size() - static_cast<std::size_t>(rank_); }

  // One past the last preorder index of the subtree rooted at i.
  std::size_t subtree_end(std::size_t i) const;
  std::vector<std::size_t> children(std::size_t i) const;
  RankedTree subtree(std::size_t i) const;
  // Preorder indices of the non-variable nodes.
  std::vector<std::size_t> nv_nodes() const;

  std::vector<int> path_of(std::size_t i) const;
  std::size_t index_of(std::span<const int> path) const;

  std::string to_string(const RankedAlphabet& alphabet) const;
  std::size_t hash() const;

  friend bool operator==(const RankedTree& a, const RankedTree& b) { return a.nodes_ == b.nodes_; }

 private:
  std::vector<Node> nodes_;
  int rank_ = 1;
};

struct TreeHash {
  std::size_t operator()(const RankedTree& t) const { return t.hash(); }
};

// Child-index path from the root.
using NodeId = std::vector<int>;

struct TreeTuple {
  std::vector<RankedTree> components;
  std::size_t width() const { return components.size(); }
  int total_rank() const;
};

TreeTuple oplus(std::vector<RankedTree> trees);
// n-fold sum of 𝟏.
TreeTuple unit_tuple(int n);

RankedTree parse_tree(std::string_view text, const RankedAlphabet& alphabet, int rank);
// Same grammar, rank read off the frontier.
RankedTree parse_tree(std::string_view text, const RankedAlphabet& alphabet);

RankedTree compose(const RankedTree& f, const TreeTuple& g);
RankedTree compose(const RankedTree& f, std::span<const RankedTree> g);

struct Factorization {
  RankedTree r;
  int k1 = 0;
  RankedTree s;
  int k2 = 0;
};

Factorization factor_at(const RankedTree& t, const NodeId& x);
Factorization factor_at_index(const RankedTree& t, std::size_t x);

// Every tree of the given rank with at most maxNV non-variable nodes,
// ordered by (NV count, term text).
std::vector<RankedTree> enumerate_trees(const RankedAlphabet& alphabet, int rank, int maxNV);

// Image under a letter-to-letter map (symbol ids of the target alphabet).
RankedTree relabel_letters(const RankedTree& t, std::span<const int> map);

}  // namespace lind
