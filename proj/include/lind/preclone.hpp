#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lind/automata.hpp"
#include "lind/trees.hpp"

namespace lind {

using Key = std::vector<std::uint32_t>;

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL ^ k.size();
    for (auto x : k) {
      h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

struct Value {
  int rank = 0;
  Key key;
  friend bool operator==(const Value&, const Value&) = default;
};

struct ValueRef {
  int rank;
  const Key* key;
};

// A preclone given by its operations on element keys. Implementations are
// immutable and only need to be correct for ranks within the truncation.
class Algebra {
 public:
  virtual ~Algebra() = default;
  virtual int truncation() const = 0;
  virtual Key unit() const = 0;
  // f (of rank fRank) composed with the tuple g; g.size() == fRank.
  virtual Key compose(int fRank, const Key& f, std::span<const ValueRef> g) const = 0;
  virtual std::string describe(int rank, const Key& key) const;
};

using AlgebraPtr = std::shared_ptr<const Algebra>;

// Rank-checked composition on values.
Value compose_values(const Algebra& a, const Value& f, std::span<const Value> g);

struct Elem {
  int rank = 0;
  std::uint32_t index = 0;
  friend bool operator==(const Elem&, const Elem&) = default;
  friend auto operator<=>(const Elem&, const Elem&) = default;
};

// Materialized element tables per rank 0..R over a value-level algebra.
class FinitaryPreclone {
 public:
  FinitaryPreclone(AlgebraPtr algebra, int truncation);

  int truncation() const { return truncation_; }
  const Algebra& algebra() const { return *algebra_; }
  const AlgebraPtr& algebra_ptr() const { return algebra_; }

  std::size_t sort_size(int n) const;
  std::size_t total_size() const;
  const Key& key(Elem e) const { return elements_[static_cast<std::size_t>(e.rank)][e.index]; }
  Value value(Elem e) const { return {e.rank, key(e)}; }
  std::optional<Elem> find(int rank, const Key& key) const;
  Elem at(int rank, const Key& key) const;  // throws NotClosed
  Elem unit() const;
  std::string describe(Elem e) const { return algebra_->describe(e.rank, key(e)); }

  // Throws RankOverflow when the result rank exceeds the truncation and
  // NotClosed when the composite is not in the table.
  Elem compose(Elem f, std::span<const Elem> g) const;

  // Adds an element if missing; returns its handle.
  Elem insert(int rank, Key key);

 private:
  AlgebraPtr algebra_;
  int truncation_;
  std::vector<std::vector<Key>> elements_;
  std::vector<std::unordered_map<Key, std::uint32_t, KeyHash>> index_;
  Elem compose_uncached(Elem f, std::span<const Elem> g, int total) const;

  mutable std::unordered_map<Key, std::uint32_t, KeyHash> memo_;
  mutable std::unordered_map<std::uint64_t, std::uint32_t> fast_memo_;
};

using PreclonePtr = std::shared_ptr<const FinitaryPreclone>;

struct PgPair {
  PreclonePtr preclone;
  std::vector<Elem> generators;
};

// Letter-to-element map from an alphabet into a materialized preclone.
struct Morphism {
  AlphabetPtr source;
  PreclonePtr target;
  std::vector<Elem> image;  // per symbol id
};

Elem morphism_eval(const Morphism& phi, const RankedTree& t);

// Homomorphic bottom-up evaluation of a tree on values.
Value evaluate_values(const Algebra& a, std::span<const Value> letterImages, const RankedTree& t);

// Map between materialized preclones, per rank.
struct PrecloneMap {
  std::vector<std::vector<std::uint32_t>> image;
  Elem operator()(Elem e) const { return {e.rank, image[static_cast<std::size_t>(e.rank)][e.index]}; }
};

// ---------------------------------------------------------------- algebras

class TransformationAlgebra : public Algebra {
 public:
  TransformationAlgebra(int states, int truncation) : states_(states), truncation_(truncation) {}
  int truncation() const override { return truncation_; }
  Key unit() const override;
  Key compose(int fRank, const Key& f, std::span<const ValueRef> g) const override;
  std::string describe(int rank, const Key& key) const override;
  int states() const { return states_; }
  // Table of σ acting on the states of an automaton.
  static Key letter_table(const TreeAutomaton& a, int symbol);
  // Apply a rank-n table to a state tuple.
  std::uint32_t apply(const Key& table, std::span<const int> args) const;

 private:
  int states_;
  int truncation_;
};

// Index-keyed view of a materialized preclone, so it can be nested.
class IndexAlgebra : public Algebra {
 public:
  explicit IndexAlgebra(PreclonePtr p) : p_(std::move(p)) {}
  int truncation() const override { return p_->truncation(); }
  Key unit() const override { return {p_->unit().index}; }
  Key compose(int fRank, const Key& f, std::span<const ValueRef> g) const override;
  std::string describe(int rank, const Key& key) const override;
  const PreclonePtr& base() const { return p_; }

 private:
  PreclonePtr p_;
};

// Direct product of several algebras; a key is the component key lengths
// followed by the concatenated component keys.
class ProductAlgebra : public Algebra {
 public:
  explicit ProductAlgebra(std::vector<AlgebraPtr> parts);
  int truncation() const override { return truncation_; }
  Key unit() const override;
  Key compose(int fRank, const Key& f, std::span<const ValueRef> g) const override;
  std::string describe(int rank, const Key& key) const override;

  std::size_t arity() const { return parts_.size(); }
  const AlgebraPtr& part(std::size_t i) const { return parts_[i]; }
  static Key pack(std::span<const Key> parts);
  static std::vector<Key> unpack(const Key& key);
  static Key component(const Key& key, std::size_t i);

 private:
  std::vector<AlgebraPtr> parts_;
  int truncation_;
};

// Algebra given by a complete composition table (read back from dumps).
class TableAlgebra : public Algebra {
 public:
  TableAlgebra(int truncation, std::vector<std::vector<std::string>> names, std::uint32_t unitIndex)
      : truncation_(truncation), names_(std::move(names)), unit_(unitIndex) {}
  int truncation() const override { return truncation_; }
  Key unit() const override { return {unit_}; }
  Key compose(int fRank, const Key& f, std::span<const ValueRef> g) const override;
  std::string describe(int rank, const Key& key) const override;
  void set(int fRank, std::uint32_t f, std::span<const Elem> g, std::uint32_t result);

 private:
  int truncation_;
  std::vector<std::vector<std::string>> names_;
  std::uint32_t unit_;
  std::unordered_map<Key, std::uint32_t, KeyHash> table_;
};

// ---------------------------------------------------------------- builders

struct Derivation {
  int generator = -1;  // -1 for the unit
  std::vector<Elem> children;
};

struct ClosureResult {
  std::shared_ptr<FinitaryPreclone> preclone;
  std::vector<Elem> generators;
  std::vector<std::vector<Derivation>> derivations;  // per rank, per element
};

inline constexpr std::size_t kDefaultBudget = 100000;

// Least composition-closed set containing the generators and the unit,
// within rank <= R.
ClosureResult closure(AlgebraPtr algebra, std::span<const Value> generators, int R,
                      std::size_t budget = kDefaultBudget);

PgPair t_exists(int R);
PgPair t_mod(int p, int R);
// Q = {0}: one element per rank.
PgPair trivial_pgpair(int R);

struct TransformationResult {
  PgPair pg;
  Morphism morphism;
};
TransformationResult transformation_pgpair(const TreeAutomaton& a, int R, std::size_t budget = kDefaultBudget);

PgPair sub_pgpair_generated(const FinitaryPreclone& s, std::span<const Elem> b, int R,
                            std::size_t budget = kDefaultBudget);

PreclonePtr direct_product(const PreclonePtr& s, const PreclonePtr& t);
Morphism target_tupling(const Morphism& phi, const Morphism& psi, const PreclonePtr& product);
Elem pair_elem(const FinitaryPreclone& product, Elem s, Elem t);

struct QuotientResult {
  PreclonePtr preclone;
  PrecloneMap projection;
};
// classes[n][i] = class id of element i of rank n (ids need not be dense).
QuotientResult quotient(const PreclonePtr& s, const std::vector<std::vector<std::uint32_t>>& classes);

// ---------------------------------------------------------------- checks

// Calls fn for every tuple of elements of the given width whose total rank
// is at most maxTotal.
void for_each_tuple(const FinitaryPreclone& s, int width, int maxTotal,
                    const std::function<void(std::span<const Elem>, int total)>& fn);

struct AxiomReport {
  std::size_t checked = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

struct AxiomMode {
  bool exhaustive = true;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::size_t max_violations = 20;
};

AxiomReport check_axioms(const FinitaryPreclone& s, const AxiomMode& mode = {});

// Searches for an isomorphism S -> T, determined by the images of S's
// generators; every candidate is checked to be a rank-preserving bijection
// respecting unit and composition.
std::optional<PrecloneMap> find_isomorphism(const PgPair& s, const FinitaryPreclone& t);

// Dump format: element list per rank plus `n: f (r:g ...) -> m:h` lines.
std::string dump_preclone(const PgPair& pg, std::size_t maxTable = 200000);
PgPair parse_dump(std::string_view text);

}  // namespace lind
