#include "lind/syntactic.hpp"

#include <algorithm>
#include <map>

namespace lind {

Key context_key(const Context& c) {
  Key k{static_cast<std::uint32_t>(c.u.rank), c.u.index, static_cast<std::uint32_t>(c.k1),
        static_cast<std::uint32_t>(c.k2)};
  for (const auto& e : c.v) {
    k.push_back(static_cast<std::uint32_t>(e.rank));
    k.push_back(e.index);
  }
  return k;
}

std::string describe_context(const FinitaryPreclone& t, const Context& c) {
  std::string out = "(" + t.describe(c.u) + ", " + std::to_string(c.k1) + ", ";
  if (c.v.empty()) out += "0";
  for (std::size_t i = 0; i < c.v.size(); ++i) out += (i ? " + " : "") + t.describe(c.v[i]);
  return out + ", " + std::to_string(c.k2) + ")";
}

ContextTable::ContextTable(const FinitaryPreclone& t, int k, int n) : k_(k), n_(n) {
  for (int k1 = 0; k1 <= k; ++k1) {
    for (int k2 = 0; k1 + k2 <= k; ++k2) {
      int l = k - k1 - k2;
      if (n == 0 && l != 0) continue;
      int ur = k1 + 1 + k2;
      if (ur > t.truncation()) continue;
      std::vector<std::vector<Elem>> tuples;
      for_each_tuple(t, n, l, [&](std::span<const Elem> v, int total) {
        if (total == l) tuples.emplace_back(v.begin(), v.end());
      });
      for (std::uint32_t ui = 0; ui < t.sort_size(ur); ++ui)
        for (const auto& v : tuples) {
          Context c{{ur, ui}, k1, k2, v};
          index_.emplace(context_key(c), static_cast<std::uint32_t>(contexts_.size()));
          contexts_.push_back(std::move(c));
        }
    }
  }
}

std::optional<std::size_t> ContextTable::find(const Context& c) const {
  auto it = index_.find(context_key(c));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ContextTable::index_of(const Context& c) const {
  auto i = find(c);
  if (!i)
    throw Error("context (k1=" + std::to_string(c.k1) + ", k2=" + std::to_string(c.k2) + ", width " +
                std::to_string(c.v.size()) + ") is not in I_{" + std::to_string(k_) + "," + std::to_string(n_) + "}");
  return *i;
}

std::vector<Context> enumerate_contexts(const FinitaryPreclone& t, int k, int n) { return ContextTable(t, k, n).contexts(); }

Elem apply_context(const FinitaryPreclone& t, Elem f, const Context& c) {
  Elem x = c.v.empty() && f.rank == 0 ? f : t.compose(f, c.v);
  std::vector<Elem> args;
  Elem unit = t.unit();
  for (int i = 0; i < c.k1; ++i) args.push_back(unit);
  args.push_back(x);
  for (int i = 0; i < c.k2; ++i) args.push_back(unit);
  return t.compose(c.u, args);
}

bool is_L_context(const FinitaryPreclone& t, const std::vector<bool>& accepting, Elem f, const Context& c) {
  Elem r = apply_context(t, f, c);
  return accepting.at(r.index);
}

CongruenceClasses syntactic_congruence(const FinitaryPreclone& t, int k, const std::vector<bool>& accepting) {
  int R = t.truncation();
  if (accepting.size() != t.sort_size(k)) throw Error("accepting set does not match the rank-k sort");
  CongruenceClasses out(static_cast<std::size_t>(R) + 1);
  for (int n = 0; n <= R; ++n) {
    ContextTable ctx(t, k, n);
    std::map<std::vector<bool>, std::uint32_t> ids;
    for (std::uint32_t i = 0; i < t.sort_size(n); ++i) {
      std::vector<bool> sig;
      sig.reserve(ctx.size());
      for (const auto& c : ctx.contexts()) sig.push_back(is_L_context(t, accepting, {n, i}, c));
      auto it = ids.emplace(std::move(sig), static_cast<std::uint32_t>(ids.size())).first;
      out[static_cast<std::size_t>(n)].push_back(it->second);
    }
  }
  return out;
}

bool SyntacticResult::accepts(const RankedTree& t) const {
  if (t.rank() != rank) throw Error("tree rank does not match the language rank");
  return accepting.at(morphism_eval(morphism, t).index);
}

std::vector<std::size_t> SyntacticResult::class_counts() const {
  std::vector<std::size_t> out;
  for (int n = 0; n <= pg.preclone->truncation(); ++n) out.push_back(pg.preclone->sort_size(n));
  return out;
}

SyntacticResult syntactic_pgpair(const TreeAutomaton& a, int R, std::size_t budget) {
  int k = a.rank();
  if (R < k + 1 || R < a.alphabet()->max_arity()) throw Error("syntactic_pgpair needs R >= k+1 and R >= max arity");
  SyntacticResult res;
  res.rank = k;
  TreeAutomaton m = minimize(a);
  res.transformation = transformation_pgpair(m, R, budget);
  const auto& T = *res.transformation.pg.preclone;
  auto alg = std::static_pointer_cast<const TransformationAlgebra>(T.algebra_ptr());
  std::vector<int> vs;
  for (int j = 1; j <= k; ++j) vs.push_back(m.var_state(j));
  std::vector<bool> P;
  for (std::uint32_t i = 0; i < T.sort_size(k); ++i) P.push_back(m.is_final(static_cast<int>(alg->apply(T.key({k, i}), vs))));
  auto classes = syntactic_congruence(T, k, P);
  auto q = quotient(res.transformation.pg.preclone, classes);
  res.projection = q.projection;
  res.pg.preclone = q.preclone;
  res.morphism = Morphism{a.alphabet(), q.preclone, {}};
  std::vector<Elem> gens;
  for (const auto& e : res.transformation.morphism.image) {
    Elem c = q.projection(e);
    res.morphism.image.push_back(c);
    if (std::find(gens.begin(), gens.end(), c) == gens.end()) gens.push_back(c);
  }
  std::sort(gens.begin(), gens.end());
  res.pg.generators = gens;
  res.accepting.assign(q.preclone->sort_size(k), false);
  for (std::uint32_t i = 0; i < T.sort_size(k); ++i)
    if (P[i]) res.accepting[q.projection({k, i}).index] = true;
  return res;
}

}  // namespace lind
