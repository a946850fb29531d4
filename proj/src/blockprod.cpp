#include "lind/blockprod.hpp"

#include <cmath>

namespace lind {

Value BlockElement::to_value() const {
  Key k;
  k.reserve(1 + F.size());
  k.push_back(f);
  k.insert(k.end(), F.begin(), F.end());
  return {rank, std::move(k)};
}

BlockElement BlockElement::from_value(const Value& v) {
  BlockElement b;
  b.rank = v.rank;
  b.f = v.key.at(0);
  b.F.assign(v.key.begin() + 1, v.key.end());
  return b;
}

BlockAlgebra::BlockAlgebra(PreclonePtr s, PreclonePtr t, int k) : s_(std::move(s)), t_(std::move(t)), k_(k) {
  if (k < 0) throw Error("block product needs k >= 0");
  if (t_->truncation() < k + 1)
    throw RankOverflow("block product over k = " + std::to_string(k) + " needs the right factor truncated at >= " +
                       std::to_string(k + 1));
  truncation_ = std::min(s_->truncation(), t_->truncation());
  contexts_.resize(static_cast<std::size_t>(truncation_) + 1);
}

const ContextTable& BlockAlgebra::contexts(int n) const {
  if (n < 0 || n > truncation_) throw RankOverflow("no contexts of arity " + std::to_string(n) + " within truncation");
  std::lock_guard<std::mutex> lock(mutex_);
  auto& slot = contexts_[static_cast<std::size_t>(n)];
  if (!slot) slot = std::make_unique<ContextTable>(*t_, k_, n);
  return *slot;
}

std::size_t BlockAlgebra::identity_context() const {
  Context c{t_->unit(), 0, 0, std::vector<Elem>(static_cast<std::size_t>(k_), t_->unit())};
  return contexts(k_).index_of(c);
}

Key BlockAlgebra::unit() const {
  const auto& I1 = contexts(1);
  Key k(1 + I1.size(), s_->unit().index);
  k[0] = t_->unit().index;
  return k;
}

Key BlockAlgebra::compose(int n, const Key& fk, std::span<const ValueRef> g) const {
  const auto& S = *s_;
  const auto& T = *t_;
  int m = 0;
  for (const auto& x : g) m += x.rank;
  const auto& Im = contexts(m);
  const auto& In = contexts(n);
  if (fk.size() != 1 + In.size()) throw Error("block element table does not match I_{k," + std::to_string(n) + "}");
  std::vector<const ContextTable*> Ig;
  std::vector<Elem> gf;
  for (const auto& x : g) {
    Ig.push_back(&contexts(x.rank));
    if (x.key->size() != 1 + Ig.back()->size()) throw Error("block element table size mismatch");
    gf.push_back({x.rank, (*x.key)[0]});
  }
  Elem f{n, fk[0]};
  Key out(1 + Im.size());
  out[0] = T.compose(f, gf).index;

  Elem unitT = T.unit();
  std::vector<Elem> w(static_cast<std::size_t>(n)), sArgs(static_cast<std::size_t>(n)), inner, outer;
  std::vector<int> l(static_cast<std::size_t>(n));
  std::vector<std::vector<Elem>> slices(static_cast<std::size_t>(n));
  Context dPrime, ci;
  for (std::size_t d = 0; d < Im.size(); ++d) {
    const Context& D = Im[d];
    std::size_t off = 0;
    for (int i = 0; i < n; ++i) {
      auto& sl = slices[static_cast<std::size_t>(i)];
      auto mi = static_cast<std::size_t>(g[static_cast<std::size_t>(i)].rank);
      sl.assign(D.v.begin() + static_cast<std::ptrdiff_t>(off), D.v.begin() + static_cast<std::ptrdiff_t>(off + mi));
      off += mi;
      int li = 0;
      for (const auto& e : sl) li += e.rank;
      l[static_cast<std::size_t>(i)] = li;
      w[static_cast<std::size_t>(i)] = T.compose(gf[static_cast<std::size_t>(i)], sl);
    }
    dPrime.u = D.u;
    dPrime.k1 = D.k1;
    dPrime.k2 = D.k2;
    dPrime.v = w;
    std::uint32_t Fval = fk[1 + In.index_of(dPrime)];
    int before = 0, after = 0;
    for (int x : l) after += x;
    for (int i = 0; i < n; ++i) {
      after -= l[static_cast<std::size_t>(i)];
      inner = w;
      inner[static_cast<std::size_t>(i)] = unitT;
      Elem x = T.compose(f, inner);
      outer.assign(static_cast<std::size_t>(D.k1), unitT);
      outer.push_back(x);
      outer.insert(outer.end(), static_cast<std::size_t>(D.k2), unitT);
      ci.u = T.compose(D.u, outer);
      ci.k1 = D.k1 + before;
      ci.k2 = after + D.k2;
      ci.v = slices[static_cast<std::size_t>(i)];
      const auto& gk = *g[static_cast<std::size_t>(i)].key;
      sArgs[static_cast<std::size_t>(i)] = {g[static_cast<std::size_t>(i)].rank, gk[1 + Ig[static_cast<std::size_t>(i)]->index_of(ci)]};
      before += l[static_cast<std::size_t>(i)];
    }
    out[1 + d] = S.compose({n, Fval}, sArgs).index;
  }
  return out;
}

std::string BlockAlgebra::describe(int rank, const Key& key) const {
  std::string out = "(" + t_->describe({rank, key[0]}) + " | ";
  for (std::size_t i = 1; i < key.size(); ++i) out += (i > 1 ? "," : "") + std::to_string(key[i]);
  return out + ")";
}

// ---------------------------------------------------------------- pg-pairs

std::vector<Value> block_generators(const BlockAlgebra& algebra, const PgPair& s, const PgPair& t, std::size_t budget) {
  std::vector<Value> gens;
  int R = algebra.truncation();
  for (int n = 0; n <= R; ++n) {
    std::vector<std::uint32_t> A, B;
    for (const auto& e : s.generators)
      if (e.rank == n) A.push_back(e.index);
    for (const auto& e : t.generators)
      if (e.rank == n) B.push_back(e.index);
    if (B.empty()) continue;
    std::size_t I = algebra.contexts(n).size();
    double count = std::pow(static_cast<double>(A.size()), static_cast<double>(I)) * static_cast<double>(B.size());
    if (count > static_cast<double>(budget))
      throw BudgetExceeded("block product has " + std::to_string(count) + " generators of rank " + std::to_string(n));
    if (A.empty() && I > 0) continue;
    std::vector<std::size_t> digit(I, 0);
    for (;;) {
      for (auto b : B) {
        BlockElement e{n, b, {}};
        for (std::size_t i = 0; i < I; ++i) e.F.push_back(A[digit[i]]);
        gens.push_back(e.to_value());
      }
      std::size_t i = 0;
      while (i < I && ++digit[i] == A.size()) digit[i++] = 0;
      if (i == I) break;
    }
  }
  return gens;
}

PgPair block_product_pg(const BlockAlgebraPtr& algebra, const PgPair& s, const PgPair& t, GeneratorSelection selection,
                        std::span<const Value> subset, std::size_t budget) {
  std::vector<Value> gens;
  if (selection == GeneratorSelection::Subset)
    gens.assign(subset.begin(), subset.end());
  else
    gens = block_generators(*algebra, s, t, budget);
  auto c = closure(algebra, gens, algebra->truncation(), budget);
  return PgPair{c.preclone, c.generators};
}

Elem second_projection(const FinitaryPreclone& blockCarrier, const FinitaryPreclone& t, Elem e) {
  (void)t;
  return {e.rank, blockCarrier.key(e)[0]};
}

double restricted_carrier_size(const BlockAlgebra& algebra, const FinitaryPreclone& tSub, int n) {
  return std::pow(static_cast<double>(algebra.s().sort_size(n)), static_cast<double>(algebra.contexts(n).size())) *
         static_cast<double>(tSub.sort_size(n));
}

std::shared_ptr<FinitaryPreclone> restricted_block_product(const BlockAlgebraPtr& algebra, const FinitaryPreclone& tSub,
                                                           std::size_t budget) {
  int R = std::min(algebra->truncation(), tSub.truncation());
  double total = 0;
  for (int n = 0; n <= R; ++n) total += restricted_carrier_size(*algebra, tSub, n);
  if (total > static_cast<double>(budget))
    throw BudgetExceeded("restricted block product has " + std::to_string(total) + " elements");
  auto p = std::make_shared<FinitaryPreclone>(algebra, R);
  for (int n = 0; n <= R; ++n) {
    std::size_t I = algebra->contexts(n).size();
    std::size_t Sn = algebra->s().sort_size(n);
    if (Sn == 0 && I > 0) continue;
    for (std::uint32_t ti = 0; ti < tSub.sort_size(n); ++ti) {
      std::uint32_t f = algebra->t().at(n, tSub.key({n, ti})).index;
      std::vector<std::size_t> digit(I, 0);
      for (;;) {
        BlockElement e{n, f, {}};
        for (std::size_t i = 0; i < I; ++i) e.F.push_back(static_cast<std::uint32_t>(digit[i]));
        p->insert(n, e.to_value().key);
        std::size_t i = 0;
        while (i < I && ++digit[i] == Sn) digit[i++] = 0;
        if (i == I) break;
      }
    }
  }
  return p;
}

// ---------------------------------------------------------------- α^C

Value alpha_C(const BlockAlgebra& source, const BlockAlgebra& target, const Context& c, const Value& x) {
  const auto& Tp = source.t();
  const auto& T = target.t();
  int k = source.k(), n = target.k(), m = x.rank;
  if (static_cast<int>(c.v.size()) != n) throw Error("alpha_C: context arity does not match the target parameter");
  if (c.k1 + c.k2 > k) throw Error("alpha_C: invalid context");
  auto embed = [&](Elem e) { return Tp.at(e.rank, T.key(e)); };
  const auto& Im = target.contexts(m);
  const auto& Isrc = source.contexts(m);
  Key out(1 + Im.size());
  out[0] = T.at(m, Tp.key({m, x.key[0]})).index;
  Elem unit = Tp.unit();
  for (std::size_t d = 0; d < Im.size(); ++d) {
    const Context& D = Im[d];
    int p1 = D.k1, p2 = D.k2;
    std::vector<Elem> v1(c.v.begin(), c.v.begin() + p1);
    std::vector<Elem> mid(c.v.begin() + p1, c.v.end() - p2);
    std::vector<Elem> v2(c.v.end() - p2, c.v.end());
    int q1 = 0, q2 = 0;
    for (const auto& e : v1) q1 += e.rank;
    for (const auto& e : v2) q2 += e.rank;
    std::vector<Elem> args = v1;
    args.push_back(unit);
    args.insert(args.end(), v2.begin(), v2.end());
    Elem innerR = Tp.compose(embed(D.u), args);
    std::vector<Elem> outer(static_cast<std::size_t>(c.k1), unit);
    outer.push_back(innerR);
    outer.insert(outer.end(), static_cast<std::size_t>(c.k2), unit);
    Context src;
    src.u = Tp.compose(c.u, outer);
    src.k1 = c.k1 + q1;
    src.k2 = q2 + c.k2;
    std::size_t off = 0;
    for (const auto& sj : D.v) {
      std::vector<Elem> slice(mid.begin() + static_cast<std::ptrdiff_t>(off),
                              mid.begin() + static_cast<std::ptrdiff_t>(off) + sj.rank);
      off += static_cast<std::size_t>(sj.rank);
      src.v.push_back(Tp.compose(embed(sj), slice));
    }
    out[1 + d] = x.key[1 + Isrc.index_of(src)];
  }
  return {m, out};
}

// ---------------------------------------------------------------- relabeling

Elem eval_with_leaves(const FinitaryPreclone& t, const Morphism& tau, const RankedTree& tree, std::span<const Elem> leaves) {
  if (static_cast<int>(leaves.size()) != tree.rank()) throw Error("eval_with_leaves: leaf count mismatch");
  std::vector<Elem> stack, args;
  int var = tree.rank();
  const auto& nodes = tree.nodes();
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto& nd = nodes[i];
    if (nd.label == RankedTree::kVar) {
      stack.push_back(leaves[static_cast<std::size_t>(--var)]);
      continue;
    }
    args.clear();
    for (int c = 0; c < nd.arity; ++c) {
      args.push_back(stack.back());
      stack.pop_back();
    }
    stack.push_back(t.compose(tau.image.at(static_cast<std::size_t>(nd.label)), args));
  }
  return stack.back();
}

namespace {

Morphism tau_of(const BlockAlgebra& algebra, std::span<const Value> gamma) {
  Morphism tau{nullptr, algebra.t_ptr(), {}};
  for (const auto& g : gamma) tau.image.push_back({g.rank, g.key.at(0)});
  return tau;
}

}  // namespace

RelabeledTree relabel(const BlockAlgebra& algebra, const RankedTree& t, const Context& d, std::span<const Value> gamma) {
  const auto& T = algebra.t();
  Morphism tau = tau_of(algebra, gamma);
  if (static_cast<int>(d.v.size()) != t.rank()) throw Error("relabel: context arity does not match the tree rank");
  RelabeledTree out{t, std::vector<Elem>(t.size())};
  Elem unit = T.unit();
  for (std::size_t x : t.nv_nodes()) {
    auto fac = factor_at_index(t, x);
    int r1 = fac.k1, r2 = fac.s.rank();
    std::vector<Elem> v1(d.v.begin(), d.v.begin() + r1);
    std::vector<Elem> v2(d.v.begin() + r1, d.v.begin() + r1 + r2);
    std::vector<Elem> v3(d.v.begin() + r1 + r2, d.v.end());
    int p1 = 0, p3 = 0;
    for (const auto& e : v1) p1 += e.rank;
    for (const auto& e : v3) p3 += e.rank;
    std::vector<Elem> leaves = v1;
    leaves.push_back(unit);
    leaves.insert(leaves.end(), v3.begin(), v3.end());
    Elem inner = eval_with_leaves(T, tau, fac.r, leaves);
    std::vector<Elem> outer(static_cast<std::size_t>(d.k1), unit);
    outer.push_back(inner);
    outer.insert(outer.end(), static_cast<std::size_t>(d.k2), unit);
    Context c;
    c.u = T.compose(d.u, outer);
    c.k1 = d.k1 + p1;
    c.k2 = p3 + d.k2;
    std::size_t off = 0;
    for (std::size_t child : fac.s.children(0)) {
      RankedTree h = fac.s.subtree(child);
      std::span<const Elem> slice(v2.data() + off, static_cast<std::size_t>(h.rank()));
      off += static_cast<std::size_t>(h.rank());
      c.v.push_back(eval_with_leaves(T, tau, h, slice));
    }
    int sigma = t.node(x).label;
    int m = t.node(x).arity;
    const Value& g = gamma[static_cast<std::size_t>(sigma)];
    out.labels[x] = {m, g.key.at(1 + algebra.contexts(m).index_of(c))};
  }
  return out;
}

std::pair<Elem, Elem> eval_two_ways(const BlockAlgebra& algebra, std::span<const Value> gamma, const RankedTree& t,
                                    const Context& d) {
  Value phi = evaluate_values(algebra, gamma, t);
  Elem q{t.rank(), phi.key.at(1 + algebra.contexts(t.rank()).index_of(d))};
  RelabeledTree bar = relabel(algebra, t, d, gamma);
  const auto& S = algebra.s();
  std::vector<Elem> stack, args;
  const auto& nodes = bar.shape.nodes();
  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (nodes[i].label == RankedTree::kVar) {
      stack.push_back(S.unit());
      continue;
    }
    args.clear();
    for (int c = 0; c < nodes[i].arity; ++c) {
      args.push_back(stack.back());
      stack.pop_back();
    }
    stack.push_back(S.compose(bar.labels[i], args));
  }
  return {q, stack.back()};
}

}  // namespace lind
