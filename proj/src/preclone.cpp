#include "lind/preclone.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace lind {

std::string Algebra::describe(int /*rank*/, const Key& key) const {
  std::string out = "[";
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(key[i]);
  }
  return out + "]";
}

Value compose_values(const Algebra& a, const Value& f, std::span<const Value> g) {
  if (static_cast<int>(g.size()) != f.rank)
    throw Error("compose: tuple width " + std::to_string(g.size()) + " does not match rank " + std::to_string(f.rank));
  int total = 0;
  std::vector<ValueRef> refs;
  refs.reserve(g.size());
  for (const auto& x : g) {
    total += x.rank;
    refs.push_back({x.rank, &x.key});
  }
  if (total > a.truncation())
    throw RankOverflow("composite of rank " + std::to_string(total) + " exceeds truncation " +
                       std::to_string(a.truncation()));
  return {total, a.compose(f.rank, f.key, refs)};
}

// ---------------------------------------------------------------- FinitaryPreclone

FinitaryPreclone::FinitaryPreclone(AlgebraPtr algebra, int truncation)
    : algebra_(std::move(algebra)), truncation_(truncation) {
  if (truncation < 0) throw Error("negative truncation");
  elements_.resize(static_cast<std::size_t>(truncation) + 1);
  index_.resize(static_cast<std::size_t>(truncation) + 1);
}

std::size_t FinitaryPreclone::sort_size(int n) const {
  if (n < 0 || n > truncation_) return 0;
  return elements_[static_cast<std::size_t>(n)].size();
}

std::size_t FinitaryPreclone::total_size() const {
  std::size_t s = 0;
  for (const auto& v : elements_) s += v.size();
  return s;
}

std::optional<Elem> FinitaryPreclone::find(int rank, const Key& key) const {
  if (rank < 0 || rank > truncation_) return std::nullopt;
  const auto& idx = index_[static_cast<std::size_t>(rank)];
  auto it = idx.find(key);
  if (it == idx.end()) return std::nullopt;
  return Elem{rank, it->second};
}

Elem FinitaryPreclone::at(int rank, const Key& key) const {
  auto e = find(rank, key);
  if (!e) throw NotClosed("element " + algebra_->describe(rank, key) + " of rank " + std::to_string(rank) +
                          " is not in the preclone");
  return *e;
}

Elem FinitaryPreclone::unit() const {
  if (truncation_ < 1) throw RankOverflow("truncation 0 has no unit");
  return at(1, algebra_->unit());
}

Elem FinitaryPreclone::insert(int rank, Key key) {
  if (rank < 0 || rank > truncation_) throw RankOverflow("insert beyond truncation");
  auto& idx = index_[static_cast<std::size_t>(rank)];
  auto it = idx.find(key);
  if (it != idx.end()) return {rank, it->second};
  auto& els = elements_[static_cast<std::size_t>(rank)];
  auto id = static_cast<std::uint32_t>(els.size());
  idx.emplace(key, id);
  els.push_back(std::move(key));
  return {rank, id};
}

Elem FinitaryPreclone::compose(Elem f, std::span<const Elem> g) const {
  if (static_cast<int>(g.size()) != f.rank)
    throw Error("compose: tuple width " + std::to_string(g.size()) + " does not match rank " + std::to_string(f.rank));
  int total = 0;
  for (const auto& x : g) total += x.rank;
  if (total > truncation_)
    throw RankOverflow("composite of rank " + std::to_string(total) + " exceeds truncation " +
                       std::to_string(truncation_));
  // packed key when every rank fits 3 bits and every index 13 bits
  if (f.rank <= 3 && f.index < 8192) {
    std::uint64_t packed = static_cast<std::uint64_t>(f.rank) << 13 | f.index;
    bool fits = true;
    for (const auto& x : g) {
      if (x.rank > 7 || x.index >= 8192) {
        fits = false;
        break;
      }
      packed = packed << 16 | static_cast<std::uint64_t>(x.rank) << 13 | x.index;
    }
    if (fits) {
      auto hit = fast_memo_.find(packed);
      if (hit != fast_memo_.end()) return {total, hit->second};
      Elem e = compose_uncached(f, g, total);
      if (fast_memo_.size() > 4000000) fast_memo_.clear();
      fast_memo_.emplace(packed, e.index);
      return e;
    }
  }
  Key memoKey;
  memoKey.reserve(2 + 2 * g.size());
  memoKey.push_back(static_cast<std::uint32_t>(f.rank));
  memoKey.push_back(f.index);
  for (const auto& x : g) {
    memoKey.push_back(static_cast<std::uint32_t>(x.rank));
    memoKey.push_back(x.index);
  }
  auto hit = memo_.find(memoKey);
  if (hit != memo_.end()) return {total, hit->second};
  Elem e = compose_uncached(f, g, total);
  if (memo_.size() > 4000000) memo_.clear();
  memo_.emplace(std::move(memoKey), e.index);
  return e;
}

Elem FinitaryPreclone::compose_uncached(Elem f, std::span<const Elem> g, int total) const {
  std::vector<ValueRef> refs;
  refs.reserve(g.size());
  for (const auto& x : g) refs.push_back({x.rank, &key(x)});
  return at(total, algebra_->compose(f.rank, key(f), refs));
}

// ---------------------------------------------------------------- evaluation

Elem morphism_eval(const Morphism& phi, const RankedTree& t) {
  const auto& s = *phi.target;
  if (t.rank() > s.truncation())
    throw RankOverflow("tree of rank " + std::to_string(t.rank()) + " exceeds truncation " +
                       std::to_string(s.truncation()));
  std::vector<Elem> stack;
  const auto& nodes = t.nodes();
  Elem unit = t.rank() > 0 ? s.unit() : Elem{};
  std::vector<Elem> args;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto& n = nodes[i];
    if (n.label == RankedTree::kVar) {
      stack.push_back(unit);
      continue;
    }
    args.clear();
    for (int c = 0; c < n.arity; ++c) {
      args.push_back(stack.back());
      stack.pop_back();
    }
    stack.push_back(s.compose(phi.image.at(static_cast<std::size_t>(n.label)), args));
  }
  return stack.back();
}

Value evaluate_values(const Algebra& a, std::span<const Value> letterImages, const RankedTree& t) {
  if (t.rank() > a.truncation())
    throw RankOverflow("tree of rank " + std::to_string(t.rank()) + " exceeds truncation " +
                       std::to_string(a.truncation()));
  std::vector<Value> stack;
  const auto& nodes = t.nodes();
  std::vector<Value> args;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto& n = nodes[i];
    if (n.label == RankedTree::kVar) {
      stack.push_back({1, a.unit()});
      continue;
    }
    args.clear();
    for (int c = 0; c < n.arity; ++c) {
      args.push_back(std::move(stack.back()));
      stack.pop_back();
    }
    stack.push_back(compose_values(a, letterImages[static_cast<std::size_t>(n.label)], args));
  }
  return stack.back();
}

// ---------------------------------------------------------------- transformations

Key TransformationAlgebra::unit() const {
  Key k(static_cast<std::size_t>(states_));
  for (int q = 0; q < states_; ++q) k[static_cast<std::size_t>(q)] = static_cast<std::uint32_t>(q);
  return k;
}

Key TransformationAlgebra::compose(int fRank, const Key& f, std::span<const ValueRef> g) const {
  const auto q = static_cast<std::size_t>(states_);
  int m = 0;
  for (const auto& x : g) m += x.rank;
  std::size_t size = 1;
  for (int i = 0; i < m; ++i) size *= q;
  Key out(size);
  std::vector<std::uint32_t> digits(static_cast<std::size_t>(m), 0);
  for (std::size_t idx = 0; idx < size; ++idx) {
    // digits hold the current argument tuple (first most significant)
    std::size_t pos = 0, fIdx = 0;
    for (int i = 0; i < fRank; ++i) {
      const auto& gi = g[static_cast<std::size_t>(i)];
      std::size_t sub = 0;
      for (int j = 0; j < gi.rank; ++j) sub = sub * q + digits[pos++];
      fIdx = fIdx * q + (*gi.key)[sub];
    }
    out[idx] = f[fIdx];
    for (int j = m - 1; j >= 0; --j) {
      if (++digits[static_cast<std::size_t>(j)] < q) break;
      digits[static_cast<std::size_t>(j)] = 0;
    }
  }
  return out;
}

std::string TransformationAlgebra::describe(int /*rank*/, const Key& key) const {
  std::string out = "[";
  for (std::size_t i = 0; i < key.size(); ++i) out += std::to_string(key[i]);
  return out + "]";
}

Key TransformationAlgebra::letter_table(const TreeAutomaton& a, int symbol) {
  const auto& t = a.table(symbol);
  return Key(t.begin(), t.end());
}

std::uint32_t TransformationAlgebra::apply(const Key& table, std::span<const int> args) const {
  std::size_t idx = 0;
  for (int x : args) idx = idx * static_cast<std::size_t>(states_) + static_cast<std::size_t>(x);
  return table[idx];
}

namespace {

std::size_t digit_sum(std::size_t idx, std::size_t base) {
  std::size_t s = 0;
  while (idx) {
    s += idx % base;
    idx /= base;
  }
  return s;
}

class ExistsAlgebra : public TransformationAlgebra {
 public:
  explicit ExistsAlgebra(int R) : TransformationAlgebra(2, R) {}
  std::string describe(int rank, const Key& key) const override {
    bool allTrue = std::all_of(key.begin(), key.end(), [](std::uint32_t x) { return x == 1; });
    bool isOr = true;
    for (std::size_t i = 0; i < key.size(); ++i) isOr = isOr && key[i] == (i != 0 ? 1u : 0u);
    std::string n = std::to_string(rank);
    if (isOr) return rank == 0 ? "false_0" : "or_" + n;
    if (allTrue) return "true_" + n;
    return TransformationAlgebra::describe(rank, key);
  }
};

class ModAlgebra : public TransformationAlgebra {
 public:
  ModAlgebra(int p, int R) : TransformationAlgebra(p, R), p_(p) {}
  std::string describe(int rank, const Key& key) const override {
    for (int r = 0; r < p_; ++r) {
      bool match = true;
      for (std::size_t i = 0; i < key.size() && match; ++i)
        match = key[i] == (digit_sum(i, static_cast<std::size_t>(p_)) + static_cast<std::size_t>(r)) %
                              static_cast<std::size_t>(p_);
      if (match) return "f_{" + std::to_string(rank) + "," + std::to_string(r) + "}";
    }
    return TransformationAlgebra::describe(rank, key);
  }

 private:
  int p_;
};

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

// ---------------------------------------------------------------- wrappers

Key IndexAlgebra::compose(int fRank, const Key& f, std::span<const ValueRef> g) const {
  std::vector<Elem> args;
  args.reserve(g.size());
  for (const auto& x : g) args.push_back({x.rank, (*x.key)[0]});
  return {p_->compose({fRank, f[0]}, args).index};
}

std::string IndexAlgebra::describe(int rank, const Key& key) const { return p_->describe({rank, key[0]}); }

ProductAlgebra::ProductAlgebra(std::vector<AlgebraPtr> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw Error("product of zero algebras");
  truncation_ = parts_[0]->truncation();
  for (const auto& p : parts_) truncation_ = std::min(truncation_, p->truncation());
}

Key ProductAlgebra::pack(std::span<const Key> parts) {
  Key out;
  out.push_back(static_cast<std::uint32_t>(parts.size()));
  for (const auto& p : parts) out.push_back(static_cast<std::uint32_t>(p.size()));
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Key> ProductAlgebra::unpack(const Key& key) {
  std::size_t n = key[0];
  std::vector<Key> out(n);
  std::size_t pos = 1 + n;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = key[1 + i];
    out[i].assign(key.begin() + static_cast<std::ptrdiff_t>(pos), key.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

Key ProductAlgebra::component(const Key& key, std::size_t i) {
  std::size_t n = key[0];
  std::size_t pos = 1 + n;
  for (std::size_t j = 0; j < i; ++j) pos += key[1 + j];
  std::size_t len = key[1 + i];
  return Key(key.begin() + static_cast<std::ptrdiff_t>(pos), key.begin() + static_cast<std::ptrdiff_t>(pos + len));
}

Key ProductAlgebra::unit() const {
  std::vector<Key> parts;
  for (const auto& p : parts_) parts.push_back(p->unit());
  return pack(parts);
}

Key ProductAlgebra::compose(int fRank, const Key& f, std::span<const ValueRef> g) const {
  auto fParts = unpack(f);
  std::vector<std::vector<Key>> gParts;
  gParts.reserve(g.size());
  for (const auto& x : g) gParts.push_back(unpack(*x.key));
  std::vector<Key> out;
  std::vector<ValueRef> refs(g.size());
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) refs[j] = {g[j].rank, &gParts[j][i]};
    out.push_back(parts_[i]->compose(fRank, fParts[i], refs));
  }
  return pack(out);
}

std::string ProductAlgebra::describe(int rank, const Key& key) const {
  auto parts = unpack(key);
  std::string out = "(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts_[i]->describe(rank, parts[i]);
  }
  return out + ")";
}

Key TableAlgebra::compose(int fRank, const Key& f, std::span<const ValueRef> g) const {
  Key k{static_cast<std::uint32_t>(fRank), f[0]};
  for (const auto& x : g) {
    k.push_back(static_cast<std::uint32_t>(x.rank));
    k.push_back((*x.key)[0]);
  }
  auto it = table_.find(k);
  if (it == table_.end()) throw NotClosed("composition missing from table");
  return {it->second};
}

std::string TableAlgebra::describe(int rank, const Key& key) const {
  const auto& n = names_.at(static_cast<std::size_t>(rank));
  if (key[0] < n.size()) return n[key[0]];
  return "#" + std::to_string(key[0]);
}

void TableAlgebra::set(int fRank, std::uint32_t f, std::span<const Elem> g, std::uint32_t result) {
  Key k{static_cast<std::uint32_t>(fRank), f};
  for (const auto& x : g) {
    k.push_back(static_cast<std::uint32_t>(x.rank));
    k.push_back(x.index);
  }
  table_[k] = result;
}

// ---------------------------------------------------------------- closure

ClosureResult closure(AlgebraPtr algebra, std::span<const Value> generators, int R, std::size_t budget) {
  ClosureResult res;
  res.preclone = std::make_shared<FinitaryPreclone>(algebra, R);
  auto& P = *res.preclone;
  res.derivations.resize(static_cast<std::size_t>(R) + 1);
  auto check_budget = [&] {
    if (P.total_size() > budget)
      throw BudgetExceeded("closure exceeded the element budget of " + std::to_string(budget));
  };
  auto add = [&](int rank, Key key, Derivation d) {
    std::size_t before = P.sort_size(rank);
    Elem e = P.insert(rank, std::move(key));
    if (P.sort_size(rank) != before) {
      res.derivations[static_cast<std::size_t>(rank)].push_back(std::move(d));
      check_budget();
    }
    return e;
  };
  Elem unitElem{};
  if (R >= 1) unitElem = add(1, algebra->unit(), Derivation{});
  for (std::size_t i = 0; i < generators.size(); ++i) {
    const auto& g = generators[i];
    if (g.rank > R) throw RankOverflow("generator of rank " + std::to_string(g.rank) + " exceeds truncation");
    Derivation d{static_cast<int>(i), std::vector<Elem>(static_cast<std::size_t>(g.rank), unitElem)};
    res.generators.push_back(add(g.rank, g.key, d));
  }

  std::vector<std::size_t> done(static_cast<std::size_t>(R) + 1, 0), cur(static_cast<std::size_t>(R) + 1, 0);
  std::vector<Elem> tuple;
  std::vector<ValueRef> refs;
  for (;;) {
    for (int r = 0; r <= R; ++r) cur[static_cast<std::size_t>(r)] = P.sort_size(r);
    if (cur == done) break;
    for (std::size_t gi = 0; gi < generators.size(); ++gi) {
      const auto& gen = generators[gi];
      int m = gen.rank;
      if (m == 0) continue;
      tuple.assign(static_cast<std::size_t>(m), Elem{});
      // position `fresh` is the first one drawn from the newly added elements
      for (int fresh = 0; fresh < m; ++fresh) {
        auto rec = [&](auto&& self, int pos, int total) -> void {
          if (pos == m) {
            refs.clear();
            for (const auto& e : tuple) refs.push_back({e.rank, &P.key(e)});
            Key k = algebra->compose(m, gen.key, refs);
            add(total, std::move(k), Derivation{static_cast<int>(gi), tuple});
            return;
          }
          for (int r = 0; r + total <= R; ++r) {
            auto ru = static_cast<std::size_t>(r);
            std::size_t lo = pos == fresh ? done[ru] : 0;
            std::size_t hi = pos < fresh ? done[ru] : cur[ru];
            for (std::size_t i = lo; i < hi; ++i) {
              tuple[static_cast<std::size_t>(pos)] = Elem{r, static_cast<std::uint32_t>(i)};
              self(self, pos + 1, total + r);
            }
          }
        };
        rec(rec, 0, 0);
      }
    }
    done = cur;
  }
  return res;
}

// ---------------------------------------------------------------- builtins

PgPair t_exists(int R) {
  auto alg = std::make_shared<ExistsAlgebra>(R);
  auto p = std::make_shared<FinitaryPreclone>(alg, R);
  for (int n = 0; n <= R; ++n) {
    std::size_t size = ipow(2, n);
    Key orK(size), trueK(size, 1);
    for (std::size_t i = 0; i < size; ++i) orK[i] = i != 0 ? 1 : 0;
    p->insert(n, orK);
    p->insert(n, trueK);
  }
  PgPair pg{p, {}};
  if (R >= 2) pg.generators.push_back({2, 0});
  pg.generators.push_back({0, 1});
  pg.generators.push_back({0, 0});
  return pg;
}

PgPair t_mod(int p, int R) {
  if (p < 2) throw Error("t_mod needs p >= 2");
  auto alg = std::make_shared<ModAlgebra>(p, R);
  auto pre = std::make_shared<FinitaryPreclone>(alg, R);
  for (int n = 0; n <= R; ++n) {
    std::size_t size = ipow(static_cast<std::size_t>(p), n);
    for (int r = 0; r < p; ++r) {
      Key k(size);
      for (std::size_t i = 0; i < size; ++i)
        k[i] = static_cast<std::uint32_t>((digit_sum(i, static_cast<std::size_t>(p)) + static_cast<std::size_t>(r)) %
                                          static_cast<std::size_t>(p));
      pre->insert(n, k);
    }
  }
  PgPair pg{pre, {}};
  pg.generators.push_back({0, 0});
  if (R >= 1) pg.generators.push_back({1, 1});
  if (R >= 2) pg.generators.push_back({2, 0});
  return pg;
}

PgPair trivial_pgpair(int R) {
  auto alg = std::make_shared<TransformationAlgebra>(1, R);
  auto p = std::make_shared<FinitaryPreclone>(alg, R);
  PgPair pg{p, {}};
  for (int n = 0; n <= R; ++n) pg.generators.push_back(p->insert(n, Key{0}));
  return pg;
}

TransformationResult transformation_pgpair(const TreeAutomaton& a, int R, std::size_t budget) {
  if (R < a.alphabet()->max_arity()) throw Error("truncation must be at least the maximal arity");
  auto alg = std::make_shared<TransformationAlgebra>(a.states(), R);
  std::vector<Value> gens;
  for (std::size_t s = 0; s < a.alphabet()->size(); ++s)
    gens.push_back({(*a.alphabet())[static_cast<int>(s)].arity, TransformationAlgebra::letter_table(a, static_cast<int>(s))});
  auto c = closure(alg, gens, R, budget);
  TransformationResult out;
  out.pg.preclone = c.preclone;
  std::set<Elem> uniq(c.generators.begin(), c.generators.end());
  out.pg.generators.assign(uniq.begin(), uniq.end());
  out.morphism = Morphism{a.alphabet(), c.preclone, c.generators};
  return out;
}

PgPair sub_pgpair_generated(const FinitaryPreclone& s, std::span<const Elem> b, int R, std::size_t budget) {
  if (R > s.truncation()) throw RankOverflow("sub-preclone truncation exceeds the ambient truncation");
  std::vector<Value> gens;
  for (const auto& e : b) gens.push_back(s.value(e));
  auto c = closure(s.algebra_ptr(), gens, R, budget);
  return PgPair{c.preclone, c.generators};
}

// ---------------------------------------------------------------- products

PreclonePtr direct_product(const PreclonePtr& s, const PreclonePtr& t) {
  if (s->truncation() != t->truncation()) throw Error("direct product needs equal truncations");
  std::vector<AlgebraPtr> parts{std::make_shared<IndexAlgebra>(s), std::make_shared<IndexAlgebra>(t)};
  auto alg = std::make_shared<ProductAlgebra>(parts);
  auto p = std::make_shared<FinitaryPreclone>(alg, s->truncation());
  for (int n = 0; n <= s->truncation(); ++n)
    for (std::uint32_t i = 0; i < s->sort_size(n); ++i)
      for (std::uint32_t j = 0; j < t->sort_size(n); ++j) {
        Key parts2[2] = {Key{i}, Key{j}};
        p->insert(n, ProductAlgebra::pack(parts2));
      }
  return p;
}

Elem pair_elem(const FinitaryPreclone& product, Elem s, Elem t) {
  if (s.rank != t.rank) throw Error("pair of elements with different ranks");
  Key parts[2] = {Key{s.index}, Key{t.index}};
  return product.at(s.rank, ProductAlgebra::pack(parts));
}

Morphism target_tupling(const Morphism& phi, const Morphism& psi, const PreclonePtr& product) {
  if (!(*phi.source == *psi.source)) throw Error("tupling of morphisms with different sources");
  Morphism out{phi.source, product, {}};
  for (std::size_t i = 0; i < phi.image.size(); ++i) out.image.push_back(pair_elem(*product, phi.image[i], psi.image[i]));
  return out;
}

// ---------------------------------------------------------------- quotients

namespace {

class ClassAlgebra : public Algebra {
 public:
  ClassAlgebra(PreclonePtr base, std::vector<std::vector<std::uint32_t>> cls, std::vector<std::vector<std::uint32_t>> reps)
      : base_(std::move(base)), cls_(std::move(cls)), reps_(std::move(reps)) {}
  int truncation() const override { return base_->truncation(); }
  Key unit() const override { return {cls_[1][base_->unit().index]}; }
  Key compose(int fRank, const Key& f, std::span<const ValueRef> g) const override {
    std::vector<Elem> args;
    for (const auto& x : g) args.push_back(rep(x.rank, (*x.key)[0]));
    Elem r = base_->compose(rep(fRank, f[0]), args);
    return {cls_[static_cast<std::size_t>(r.rank)][r.index]};
  }
  std::string describe(int rank, const Key& key) const override {
    return "[" + base_->describe(rep(rank, key[0])) + "]";
  }

 private:
  Elem rep(int rank, std::uint32_t c) const { return {rank, reps_[static_cast<std::size_t>(rank)][c]}; }
  PreclonePtr base_;
  std::vector<std::vector<std::uint32_t>> cls_;
  std::vector<std::vector<std::uint32_t>> reps_;
};

}  // namespace

void for_each_tuple(const FinitaryPreclone& s, int width, int maxTotal,
                    const std::function<void(std::span<const Elem>, int total)>& fn) {
  std::vector<Elem> tuple(static_cast<std::size_t>(width));
  auto rec = [&](auto&& self, int pos, int total) -> void {
    if (pos == width) {
      fn(tuple, total);
      return;
    }
    for (int r = 0; r + total <= maxTotal; ++r) {
      std::size_t n = s.sort_size(r);
      for (std::uint32_t i = 0; i < n; ++i) {
        tuple[static_cast<std::size_t>(pos)] = {r, i};
        self(self, pos + 1, total + r);
      }
    }
  };
  rec(rec, 0, 0);
}

QuotientResult quotient(const PreclonePtr& s, const std::vector<std::vector<std::uint32_t>>& classes) {
  int R = s->truncation();
  if (static_cast<int>(classes.size()) != R + 1) throw Error("quotient: partition must cover ranks 0..R");
  std::vector<std::vector<std::uint32_t>> dense(classes.size()), reps(classes.size());
  for (std::size_t n = 0; n < classes.size(); ++n) {
    if (classes[n].size() != s->sort_size(static_cast<int>(n))) throw Error("quotient: partition size mismatch");
    std::map<std::uint32_t, std::uint32_t> ids;
    for (std::uint32_t i = 0; i < classes[n].size(); ++i) {
      auto [it, fresh] = ids.emplace(classes[n][i], static_cast<std::uint32_t>(ids.size()));
      if (fresh) reps[n].push_back(i);
      dense[n].push_back(it->second);
    }
  }
  // congruence check against representatives
  for (int n = 0; n <= R; ++n) {
    for (std::uint32_t f = 0; f < s->sort_size(n); ++f) {
      Elem fe{n, f};
      Elem fr{n, reps[static_cast<std::size_t>(n)][dense[static_cast<std::size_t>(n)][f]]};
      for_each_tuple(*s, n, R, [&](std::span<const Elem> g, int total) {
        std::vector<Elem> gr;
        for (const auto& x : g) gr.push_back({x.rank, reps[static_cast<std::size_t>(x.rank)][dense[static_cast<std::size_t>(x.rank)][x.index]]});
        Elem a = s->compose(fe, g), b = s->compose(fr, gr);
        if (dense[static_cast<std::size_t>(total)][a.index] != dense[static_cast<std::size_t>(total)][b.index]) {
          std::string w = "partition is not a congruence: " + s->describe(fe) + " applied to (";
          for (std::size_t i = 0; i < g.size(); ++i) w += (i ? ", " : "") + s->describe(g[i]);
          w += ") lands in a different class than the representatives' composite";
          throw NotACongruence(w);
        }
      });
    }
  }
  auto alg = std::make_shared<ClassAlgebra>(s, dense, reps);
  auto q = std::make_shared<FinitaryPreclone>(alg, R);
  for (int n = 0; n <= R; ++n)
    for (std::uint32_t c = 0; c < reps[static_cast<std::size_t>(n)].size(); ++c) q->insert(n, Key{c});
  return {q, PrecloneMap{dense}};
}

// ---------------------------------------------------------------- axioms

namespace {

std::string show_tuple(const FinitaryPreclone& s, std::span<const Elem> g) {
  std::string out = "(";
  for (std::size_t i = 0; i < g.size(); ++i) out += (i ? " + " : "") + s.describe(g[i]);
  return out + ")";
}

struct AxiomChecker {
  const FinitaryPreclone& s;
  AxiomReport& rep;
  std::size_t maxViolations;

  void violation(std::string msg) {
    if (rep.violations.size() < maxViolations) rep.violations.push_back(std::move(msg));
  }

  void check_unit(Elem f) {
    ++rep.checked;
    try {
      Elem u = s.unit();
      Elem a = s.compose(u, std::span<const Elem>(&f, 1));
      if (a != f) violation("unit law 1.f = f fails for f = " + s.describe(f));
      std::vector<Elem> units(static_cast<std::size_t>(f.rank), u);
      Elem b = s.compose(f, units);
      if (b != f) violation("unit law f.n = f fails for f = " + s.describe(f));
    } catch (const Error& e) {
      violation(std::string("unit law on ") + s.describe(f) + ": " + e.what());
    }
  }

  void check_assoc(Elem f, std::span<const Elem> g, Elem fg, std::span<const Elem> h) {
    ++rep.checked;
    try {
      Elem lhs = s.compose(fg, h);
      std::vector<Elem> inner;
      std::size_t pos = 0;
      for (const auto& gi : g) {
        auto slice = h.subspan(pos, static_cast<std::size_t>(gi.rank));
        pos += static_cast<std::size_t>(gi.rank);
        inner.push_back(s.compose(gi, slice));
      }
      Elem rhs = s.compose(f, inner);
      if (lhs != rhs)
        violation("associativity fails for f = " + s.describe(f) + ", g = " + show_tuple(s, g) +
                  ", h = " + show_tuple(s, h) + ": " + s.describe(lhs) + " vs " + s.describe(rhs));
    } catch (const Error& e) {
      violation("associativity for f = " + s.describe(f) + ", g = " + show_tuple(s, g) + ", h = " +
                show_tuple(s, h) + ": " + e.what());
    }
  }
};

// Random tuple of the given width with total rank <= maxTotal.
bool sample_tuple(const FinitaryPreclone& s, int width, int maxTotal, std::mt19937_64& rng, std::vector<Elem>& out) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    out.clear();
    int total = 0;
    bool ok = true;
    for (int i = 0; i < width && ok; ++i) {
      std::vector<int> ranks;
      for (int r = 0; r + total <= maxTotal; ++r)
        if (s.sort_size(r) > 0) ranks.push_back(r);
      if (ranks.empty()) {
        ok = false;
        break;
      }
      int r = ranks[rng() % ranks.size()];
      out.push_back({r, static_cast<std::uint32_t>(rng() % s.sort_size(r))});
      total += r;
    }
    if (ok) return true;
  }
  return false;
}

constexpr std::uint32_t kBad = 0xffffffffu;
constexpr std::size_t kMaxDenseEntries = 60'000'000;

// Composition table for f of rank |pattern| against tuples of the given
// rank pattern: data[f * tuples + mixed-radix tuple index].
struct DenseTable {
  std::vector<int> pattern;
  std::vector<std::size_t> radix;
  std::size_t tuples = 1;
  std::vector<std::uint32_t> data;

  std::size_t index_of(std::span<const Elem> g) const {
    std::size_t i = 0;
    for (std::size_t j = 0; j < g.size(); ++j) i = i * radix[j] + g[j].index;
    return i;
  }
  void decode(std::size_t i, std::vector<Elem>& out) const {
    out.resize(pattern.size());
    for (std::size_t j = pattern.size(); j-- > 0;) {
      out[j] = {pattern[j], static_cast<std::uint32_t>(i % radix[j])};
      i /= radix[j];
    }
  }
};

class DenseTables {
 public:
  DenseTables(const FinitaryPreclone& s, AxiomChecker& chk) : s_(s), chk_(chk) {}

  const DenseTable& get(const std::vector<int>& pattern) {
    auto it = tables_.find(pattern);
    if (it != tables_.end()) return it->second;
    DenseTable t;
    t.pattern = pattern;
    for (int r : pattern) {
      t.radix.push_back(s_.sort_size(r));
      t.tuples *= s_.sort_size(r);
    }
    int n = static_cast<int>(pattern.size());
    std::size_t fs = s_.sort_size(n);
    entries_ += fs * t.tuples;
    if (entries_ > kMaxDenseEntries)
      throw BudgetExceeded("exhaustive axiom check needs more than " + std::to_string(kMaxDenseEntries) +
                           " table entries; use sampling");
    t.data.assign(fs * t.tuples, kBad);
    std::vector<Elem> g;
    for (std::size_t gi = 0; gi < t.tuples; ++gi) {
      t.decode(gi, g);
      for (std::uint32_t f = 0; f < fs; ++f) {
        try {
          t.data[f * t.tuples + gi] = s_.compose({n, f}, g).index;
        } catch (const Error& e) {
          chk_.violation("composite of " + s_.describe({n, f}) + " with " + show_tuple(s_, g) + ": " + e.what());
        }
      }
    }
    return tables_.emplace(pattern, std::move(t)).first->second;
  }

 private:
  const FinitaryPreclone& s_;
  AxiomChecker& chk_;
  std::map<std::vector<int>, DenseTable> tables_;
  std::size_t entries_ = 0;
};

// All rank patterns of the given width with total <= maxTotal.
void for_each_pattern(int width, int maxTotal, const std::function<void(const std::vector<int>&, int)>& fn) {
  std::vector<int> p(static_cast<std::size_t>(width));
  auto rec = [&](auto&& self, int pos, int total) -> void {
    if (pos == width) {
      fn(p, total);
      return;
    }
    for (int r = 0; r + total <= maxTotal; ++r) {
      p[static_cast<std::size_t>(pos)] = r;
      self(self, pos + 1, total + r);
    }
  };
  rec(rec, 0, 0);
}

// Every associativity instance (f.g).h = f.(g.h) within the truncation,
// evaluated through dense composition tables.
void check_assoc_exhaustive(const FinitaryPreclone& s, AxiomChecker& chk) {
  int R = s.truncation();
  DenseTables tables(s, chk);
  std::vector<Elem> g, h, gh;
  for (int n = 0; n <= R; ++n) {
    std::size_t fs = s.sort_size(n);
    if (fs == 0) continue;
    for_each_pattern(n, R, [&](const std::vector<int>& p, int m) {
      const DenseTable& Tg = tables.get(p);
      if (Tg.tuples == 0) return;
      for_each_pattern(m, R, [&](const std::vector<int>& q, int qt) {
        const DenseTable& Th = tables.get(q);
        if (Th.tuples == 0) return;
        // slices of h matching the components of g
        std::vector<const DenseTable*> slice;
        std::vector<int> ghPattern;
        std::size_t off = 0;
        for (int r : p) {
          std::vector<int> sp(q.begin() + static_cast<std::ptrdiff_t>(off), q.begin() + static_cast<std::ptrdiff_t>(off) + r);
          off += static_cast<std::size_t>(r);
          int sum = 0;
          for (int x : sp) sum += x;
          slice.push_back(&tables.get(sp));
          ghPattern.push_back(sum);
        }
        const DenseTable& Tgh = tables.get(ghPattern);
        for (std::size_t gi = 0; gi < Tg.tuples; ++gi) {
          Tg.decode(gi, g);
          for (std::size_t hi = 0; hi < Th.tuples; ++hi) {
            Th.decode(hi, h);
            gh.clear();
            bool bad = false;
            std::size_t pos = 0;
            for (std::size_t i = 0; i < g.size(); ++i) {
              std::span<const Elem> sl(h.data() + pos, static_cast<std::size_t>(p[i]));
              pos += static_cast<std::size_t>(p[i]);
              const DenseTable& Ts = *slice[i];
              std::uint32_t x = Ts.data[g[i].index * Ts.tuples + Ts.index_of(sl)];
              if (x == kBad) bad = true;
              gh.push_back({ghPattern[i], x});
            }
            if (bad) continue;
            std::size_t ghi = Tgh.index_of(gh);
            for (std::uint32_t f = 0; f < fs; ++f) {
              std::uint32_t fg = Tg.data[f * Tg.tuples + gi];
              std::uint32_t rhs = Tgh.data[f * Tgh.tuples + ghi];
              if (fg == kBad || rhs == kBad) continue;
              std::uint32_t lhs = Th.data[fg * Th.tuples + hi];
              if (lhs == kBad) continue;
              ++chk.rep.checked;
              if (lhs != rhs)
                chk.violation("associativity fails for f = " + s.describe({n, f}) + ", g = " + show_tuple(s, g) +
                              ", h = " + show_tuple(s, h) + ": " + s.describe({qt, lhs}) + " vs " +
                              s.describe({qt, rhs}));
            }
          }
        }
      });
    });
  }
}

}  // namespace

AxiomReport check_axioms(const FinitaryPreclone& s, const AxiomMode& mode) {
  AxiomReport rep;
  AxiomChecker chk{s, rep, mode.max_violations};
  int R = s.truncation();
  if (R < 1) return rep;
  for (int n = 0; n <= R; ++n)
    for (std::uint32_t i = 0; i < s.sort_size(n); ++i) chk.check_unit({n, i});

  if (mode.exhaustive) {
    check_assoc_exhaustive(s, chk);
    return rep;
  }

  std::mt19937_64 rng(mode.seed);
  std::vector<Elem> g, h;
  for (std::size_t k = 0; k < mode.samples; ++k) {
    int n = static_cast<int>(rng() % static_cast<std::uint64_t>(R + 1));
    if (s.sort_size(n) == 0) continue;
    Elem f{n, static_cast<std::uint32_t>(rng() % s.sort_size(n))};
    if (!sample_tuple(s, n, R, rng, g)) continue;
    Elem fg;
    try {
      fg = s.compose(f, g);
    } catch (const Error& e) {
      chk.violation("composite of " + s.describe(f) + " with " + show_tuple(s, g) + ": " + e.what());
      continue;
    }
    if (!sample_tuple(s, fg.rank, R, rng, h)) continue;
    chk.check_assoc(f, g, fg, h);
  }
  return rep;
}

// ---------------------------------------------------------------- isomorphism

std::optional<PrecloneMap> find_isomorphism(const PgPair& pg, const FinitaryPreclone& t) {
  const auto& s = *pg.preclone;
  int R = s.truncation();
  if (t.truncation() != R) return std::nullopt;
  for (int n = 0; n <= R; ++n)
    if (s.sort_size(n) != t.sort_size(n)) return std::nullopt;

  // derivations of every element of S from the generators
  auto idx = std::make_shared<IndexAlgebra>(pg.preclone);
  std::vector<Elem> gens = pg.generators;
  std::vector<Value> gv;
  for (const auto& g : gens) gv.push_back({g.rank, Key{g.index}});
  auto c = closure(idx, gv, R);
  if (c.preclone->total_size() != s.total_size()) {
    // not generated by its generators: use every element
    gens.clear();
    gv.clear();
    for (int n = 0; n <= R; ++n)
      for (std::uint32_t i = 0; i < s.sort_size(n); ++i) {
        gens.push_back({n, i});
        gv.push_back({n, Key{i}});
      }
    c = closure(idx, gv, R);
  }
  const auto& P = *c.preclone;
  // P element -> S element
  auto toS = [&](Elem e) { return Elem{e.rank, P.key(e)[0]}; };

  std::vector<Elem> choice(gens.size());
  std::optional<PrecloneMap> found;
  auto try_assignment = [&]() -> bool {
    PrecloneMap map;
    map.image.resize(static_cast<std::size_t>(R) + 1);
    std::vector<std::vector<int>> state(static_cast<std::size_t>(R) + 1);
    for (int n = 0; n <= R; ++n) {
      map.image[static_cast<std::size_t>(n)].assign(s.sort_size(n), 0);
      state[static_cast<std::size_t>(n)].assign(s.sort_size(n), 0);
    }
    // evaluate images through derivations (children were derived earlier)
    std::function<Elem(Elem)> image = [&](Elem pe) -> Elem {
      Elem se = toS(pe);
      auto& st = state[static_cast<std::size_t>(se.rank)][se.index];
      if (st == 2) return {se.rank, map.image[static_cast<std::size_t>(se.rank)][se.index]};
      if (st == 1) throw Error("cyclic derivation");
      st = 1;
      const auto& d = c.derivations[static_cast<std::size_t>(pe.rank)][pe.index];
      Elem out;
      if (d.generator < 0) {
        out = t.unit();
      } else {
        std::vector<Elem> ch;
        for (const auto& x : d.children) ch.push_back(image(x));
        out = t.compose(choice[static_cast<std::size_t>(d.generator)], ch);
      }
      map.image[static_cast<std::size_t>(se.rank)][se.index] = out.index;
      st = 2;
      return out;
    };
    try {
      for (int n = 0; n <= R; ++n)
        for (std::uint32_t i = 0; i < P.sort_size(n); ++i) image({n, i});
    } catch (const Error&) {
      return false;
    }
    for (int n = 0; n <= R; ++n) {
      std::set<std::uint32_t> seen(map.image[static_cast<std::size_t>(n)].begin(), map.image[static_cast<std::size_t>(n)].end());
      if (seen.size() != s.sort_size(n)) return false;
    }
    if (R >= 1 && map(s.unit()) != t.unit()) return false;
    bool ok = true;
    try {
      for (int n = 0; n <= R && ok; ++n)
        for (std::uint32_t i = 0; i < s.sort_size(n) && ok; ++i) {
          Elem f{n, i};
          for_each_tuple(s, n, R, [&](std::span<const Elem> g, int) {
            if (!ok) return;
            std::vector<Elem> mg;
            for (const auto& x : g) mg.push_back(map(x));
            if (map(s.compose(f, g)) != t.compose(map(f), mg)) ok = false;
          });
        }
    } catch (const Error&) {
      return false;
    }
    if (ok) found = map;
    return ok;
  };
  auto rec = [&](auto&& self, std::size_t i) -> bool {
    if (i == gens.size()) return try_assignment();
    for (std::uint32_t j = 0; j < t.sort_size(gens[i].rank); ++j) {
      choice[i] = {gens[i].rank, j};
      if (self(self, i + 1)) return true;
    }
    return false;
  };
  rec(rec, 0);
  return found;
}

// ---------------------------------------------------------------- dumps

std::string dump_preclone(const PgPair& pg, std::size_t maxTable) {
  const auto& s = *pg.preclone;
  int R = s.truncation();
  std::ostringstream out;
  out << "preclone\n";
  out << "trunc " << R << "\n";
  for (int n = 0; n <= R; ++n) {
    out << "sort " << n << " " << s.sort_size(n) << "\n";
    for (std::uint32_t i = 0; i < s.sort_size(n); ++i) out << "elem " << n << " " << i << " " << s.describe({n, i}) << "\n";
  }
  if (R >= 1) out << "unit " << s.unit().index << "\n";
  for (const auto& g : pg.generators) out << "gen " << g.rank << " " << g.index << "\n";
  std::size_t entries = 0;
  for (int n = 0; n <= R; ++n)
    for (std::uint32_t i = 0; i < s.sort_size(n); ++i)
      for_each_tuple(s, n, R, [&](std::span<const Elem>, int) { ++entries; });
  if (entries > maxTable) {
    out << "table omitted " << entries << "\n";
    return out.str();
  }
  for (int n = 0; n <= R; ++n)
    for (std::uint32_t i = 0; i < s.sort_size(n); ++i)
      for_each_tuple(s, n, R, [&](std::span<const Elem> g, int) {
        Elem h = s.compose({n, i}, g);
        out << n << ": " << i << " (";
        for (std::size_t j = 0; j < g.size(); ++j) out << (j ? " " : "") << g[j].rank << ":" << g[j].index;
        out << ") -> " << h.rank << ":" << h.index << "\n";
      });
  return out.str();
}

PgPair parse_dump(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  int R = -1;
  std::vector<std::vector<std::string>> names;
  std::uint32_t unit = 0;
  std::vector<Elem> gens;
  struct Entry {
    int n;
    std::uint32_t f;
    std::vector<Elem> g;
    Elem h;
  };
  std::vector<Entry> entries;
  auto fail = [&](const std::string& m) { throw ParseError("dump line " + std::to_string(lineno) + ": " + m); };
  auto parse_elem = [&](const std::string& w) {
    auto c = w.find(':');
    if (c == std::string::npos) fail("expected rank:index, got '" + w + "'");
    try {
      return Elem{std::stoi(w.substr(0, c)), static_cast<std::uint32_t>(std::stoul(w.substr(c + 1)))};
    } catch (const std::logic_error&) {
      fail("bad element '" + w + "'");
    }
    return Elem{};
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ws(line);
    std::string head;
    if (!(ws >> head)) continue;
    try {
      if (head == "preclone") continue;
      if (head == "trunc") {
        ws >> R;
        names.assign(static_cast<std::size_t>(R) + 1, {});
      } else if (head == "sort") {
        int n;
        std::size_t count;
        ws >> n >> count;
        if (R < 0 || n < 0 || n > R) fail("sort outside truncation");
        names[static_cast<std::size_t>(n)].assign(count, "");
      } else if (head == "elem") {
        int n;
        std::size_t i;
        ws >> n >> i;
        std::string rest;
        std::getline(ws, rest);
        if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
        if (R < 0 || n < 0 || n > R || i >= names[static_cast<std::size_t>(n)].size()) fail("element outside its sort");
        names[static_cast<std::size_t>(n)][i] = rest;
      } else if (head == "unit") {
        ws >> unit;
      } else if (head == "gen") {
        int n;
        std::uint32_t i;
        ws >> n >> i;
        gens.push_back({n, i});
      } else if (head == "table") {
        fail("dump has no composition table");
      } else if (head.back() == ':') {
        Entry e;
        e.n = std::stoi(head.substr(0, head.size() - 1));
        ws >> e.f;
        std::string w;
        ws >> w;
        if (w.empty() || w[0] != '(') fail("expected '('");
        w.erase(0, 1);
        for (;;) {
          bool close = !w.empty() && w.back() == ')';
          if (close) w.pop_back();
          if (!w.empty()) e.g.push_back(parse_elem(w));
          if (close) break;
          if (!(ws >> w)) fail("unterminated tuple");
        }
        ws >> w;
        if (w != "->") fail("expected '->'");
        ws >> w;
        e.h = parse_elem(w);
        entries.push_back(std::move(e));
      } else {
        fail("unrecognized line");
      }
    } catch (const std::logic_error&) {
      fail("malformed line");
    }
  }
  if (R < 0) throw ParseError("dump: missing trunc line");
  auto alg = std::make_shared<TableAlgebra>(R, names, unit);
  for (const auto& e : entries) alg->set(e.n, e.f, e.g, e.h.index);
  auto p = std::make_shared<FinitaryPreclone>(alg, R);
  for (int n = 0; n <= R; ++n)
    for (std::uint32_t i = 0; i < names[static_cast<std::size_t>(n)].size(); ++i) p->insert(n, Key{i});
  for (const auto& g : gens)
    if (g.rank < 0 || g.rank > R || g.index >= p->sort_size(g.rank)) throw ParseError("dump: generator out of range");
  return PgPair{p, gens};
}

}  // namespace lind
