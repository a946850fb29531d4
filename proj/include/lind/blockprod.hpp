#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "lind/preclone.hpp"
#include "lind/syntactic.hpp"

namespace lind {

// Element (F, f) of S □_k T: F tabulated over I_{k,n} in ContextTable
// order. Keys are laid out as [f, F(C_0), F(C_1), ...].
struct BlockElement {
  int rank = 0;
  std::uint32_t f = 0;
  std::vector<std::uint32_t> F;

  Value to_value() const;
  static BlockElement from_value(const Value& v);
};

class BlockAlgebra : public Algebra {
 public:
  // Truncation is min(S, T); T must reach rank k+1 for the contexts.
  BlockAlgebra(PreclonePtr s, PreclonePtr t, int k);

  int truncation() const override { return truncation_; }
  Key unit() const override;
  Key compose(int fRank, const Key& f, std::span<const ValueRef> g) const override;
  std::string describe(int rank, const Key& key) const override;

  int k() const { return k_; }
  const FinitaryPreclone& s() const { return *s_; }
  const FinitaryPreclone& t() const { return *t_; }
  const PreclonePtr& s_ptr() const { return s_; }
  const PreclonePtr& t_ptr() const { return t_; }
  const ContextTable& contexts(int n) const;
  // Index of (𝟏, 0, 𝐤, 0) in I_{k,k}.
  std::size_t identity_context() const;

 private:
  PreclonePtr s_, t_;
  int k_;
  int truncation_;
  mutable std::vector<std::unique_ptr<ContextTable>> contexts_;
  mutable std::mutex mutex_;
};

using BlockAlgebraPtr = std::shared_ptr<const BlockAlgebra>;

enum class GeneratorSelection { All, Subset };

// Every (F, g) with g in B_n and F(C) in A_n for all C in I_{k,n}.
std::vector<Value> block_generators(const BlockAlgebra& algebra, const PgPair& s, const PgPair& t,
                                    std::size_t budget = kDefaultBudget);

// Closure of the selected generators (F, g) under composition. With `All`
// the generators are every (F, g) with g in B_n and F(C) in A_n.
PgPair block_product_pg(const BlockAlgebraPtr& algebra, const PgPair& s, const PgPair& t,
                        GeneratorSelection selection, std::span<const Value> subset = {},
                        std::size_t budget = kDefaultBudget);

Elem second_projection(const FinitaryPreclone& blockCarrier, const FinitaryPreclone& t, Elem e);

// Number of elements of rank n of S □_k^{T'} T.
double restricted_carrier_size(const BlockAlgebra& algebra, const FinitaryPreclone& tSub, int n);
// All elements of S □_k^{T'} T (T' = algebra's T, tSub a sub-preclone with
// the same keys); throws BudgetExceeded when too large.
std::shared_ptr<FinitaryPreclone> restricted_block_product(const BlockAlgebraPtr& algebra, const FinitaryPreclone& tSub,
                                                           std::size_t budget = kDefaultBudget);

// α^C: S □_k^{T'} T -> S □_n T for C in I'_{k,n}. `source` is over (S, T'),
// `target` over (S, T) with rank parameter n; T shares keys with T'.
Value alpha_C(const BlockAlgebra& source, const BlockAlgebra& target, const Context& c, const Value& x);

// Evaluation of trees whose variable leaves are replaced by given elements;
// intermediate ranks stay within the leaves' total rank plus nothing more.
Elem eval_with_leaves(const FinitaryPreclone& t, const Morphism& tau, const RankedTree& tree, std::span<const Elem> leaves);

// t̄_D: per preorder node, the S-element labelling it (unused at variables).
struct RelabeledTree {
  RankedTree shape;
  std::vector<Elem> labels;
};

RelabeledTree relabel(const BlockAlgebra& algebra, const RankedTree& t, const Context& d, std::span<const Value> gamma);

// (Q_t(D), α(t̄_D)); the two must coincide.
std::pair<Elem, Elem> eval_two_ways(const BlockAlgebra& algebra, std::span<const Value> gamma, const RankedTree& t,
                                    const Context& d);

}  // namespace lind
