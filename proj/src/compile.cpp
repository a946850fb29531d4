#include "lind/compile.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace lind {

int default_truncation(const RankedAlphabet& sigma, int k) { return std::max(k + 1, sigma.max_arity()); }

Value CompiledRecognizer::evaluate(const RankedTree& structure) const {
  if (structure.rank() != rank)
    throw Error("tree of rank " + std::to_string(structure.rank()) + " given to a rank-" + std::to_string(rank) +
                " recognizer");
  return evaluate_values(*algebra, gamma, structure);
}

bool membership_structure(const CompiledRecognizer& rec, const RankedTree& structure) {
  return rec.accepting(rec.evaluate(structure));
}

bool membership(const CompiledRecognizer& rec, const RankedTree& t, const Interpretation& lambda) {
  return membership_structure(rec, mk_structure(*rec.alphabet, t, lambda));
}

namespace {

using AKey = BuilderSpec::Key;

// Recognizer from a complete automaton over Σ_Y.
RecognizerPtr from_automaton(const TreeAutomaton& a, const ExtendedAlphabetPtr& z, int k, int R, std::string kind) {
  auto alg = std::make_shared<TransformationAlgebra>(a.states(), R);
  auto rec = std::make_shared<CompiledRecognizer>();
  rec->algebra = alg;
  rec->alphabet = z;
  rec->rank = k;
  rec->truncation = R;
  rec->kind = std::move(kind);
  for (int l = 0; l < static_cast<int>(a.alphabet()->size()); ++l)
    rec->gamma.push_back({(*a.alphabet())[l].arity, TransformationAlgebra::letter_table(a, l)});
  std::vector<int> vs;
  for (int j = 1; j <= k; ++j) vs.push_back(a.var_state(j));
  std::vector<bool> finals;
  for (int q = 0; q < a.states(); ++q) finals.push_back(a.is_final(q));
  rec->accepting = [alg, vs, finals, k](const Value& v) {
    return v.rank == k && finals[alg->apply(v.key, vs)];
  };
  return rec;
}

// Atom automaton states: [nv, isVar, a, b, c] or the sink [-1].
// nv counts variable leaves below; a, b, c are predicate flags.
TreeAutomaton atom_automaton(const Formula& f, const ExtendedAlphabet& z, int k) {
  auto index = [&](const std::string& v) {
    if (v.empty()) return -1;
    int i = z.var_index(v);
    if (i < 0) throw Error("free variable " + v + " is not among the structure variables");
    return i;
  };
  int xi = index(f.x), yi = index(f.y);
  const RankedAlphabet& sigma = *z.alphabet();
  BuilderSpec spec;
  spec.var_key = [](int) { return AKey{1, 1, 0, 0, 0}; };
  spec.step = [&](int letter, std::span<const AKey* const> ch) -> AKey {
    std::int64_t nv = 0;
    for (const AKey* c : ch) {
      if ((*c)[0] < 0) return {-1};
      nv += (*c)[0];
    }
    if (nv > k) return {-1};
    std::uint32_t mask = z.mask_of(letter);
    bool hx = xi >= 0 && (mask >> xi & 1u), hy = yi >= 0 && (mask >> yi & 1u);
    int n = sigma[letter].arity;
    std::int64_t a = 0, b = 0, c = 0;
    auto before = [&](std::size_t upto) {
      std::int64_t s = 0;
      for (std::size_t i = 0; i < upto; ++i) s += (*ch[i])[0];
      return s;
    };
    // the child carrying a nonzero `a`, if any
    auto marked = [&]() -> int {
      for (std::size_t i = 0; i < ch.size(); ++i)
        if ((*ch[i])[2] != 0) return static_cast<int>(i);
      return -1;
    };
    switch (f.kind) {
      case Kind::True:
      case Kind::False:
        break;
      case Kind::Label: {
        if (hx) {
          a = z.symbol_of(letter) == f.symbol ? 1 : 2;
        } else if (int m = marked(); m >= 0) {
          a = (*ch[static_cast<std::size_t>(m)])[2];
        }
        break;
      }
      case Kind::Root:
        a = hx ? 1 : (marked() >= 0 ? 2 : 0);
        break;
      case Kind::Less: {
        bool anyX = false, anyY = false, good = false;
        for (const AKey* ch1 : ch) {
          anyX = anyX || (*ch1)[2];
          anyY = anyY || (*ch1)[3];
          good = good || (*ch1)[4];
        }
        a = hx || anyX;
        b = hy || anyY;
        c = good || (hx && anyY);
        break;
      }
      case Kind::Succ: {
        bool good = false;
        for (const AKey* ch1 : ch) good = good || (*ch1)[4];
        a = hy;
        c = good || (hx && n >= f.i && (*ch[static_cast<std::size_t>(f.i - 1)])[2]);
        break;
      }
      case Kind::Max: {
        if (hx) {
          if (n >= f.i && (*ch[static_cast<std::size_t>(f.i - 1)])[1]) {
            a = 1;
            b = before(static_cast<std::size_t>(f.i - 1));
          } else {
            a = 2;
          }
        } else if (int m = marked(); m >= 0) {
          a = (*ch[static_cast<std::size_t>(m)])[2];
          b = (*ch[static_cast<std::size_t>(m)])[3] + before(static_cast<std::size_t>(m));
        }
        break;
      }
      case Kind::Left:
      case Kind::Right: {
        if (hx) {
          a = 1;
          b = f.kind == Kind::Left ? 0 : nv;
        } else if (int m = marked(); m >= 0) {
          a = 1;
          b = (*ch[static_cast<std::size_t>(m)])[3] + before(static_cast<std::size_t>(m));
        }
        break;
      }
      default:
        throw Error("not an atomic formula");
    }
    return {nv, 0, a, b, c};
  };
  spec.is_final = [&](const AKey& key) {
    if (key[0] < 0) return false;
    switch (f.kind) {
      case Kind::True:
        return true;
      case Kind::False:
        return false;
      case Kind::Label:
      case Kind::Root:
        return key[2] == 1;
      case Kind::Less:
      case Kind::Succ:
        return key[4] != 0;
      case Kind::Max:
        return key[2] == 1 && key[3] == f.j - 1;
      case Kind::Left:
        return key[2] == 1 && key[3] == f.j;
      case Kind::Right:
        return key[2] == 1 && key[3] + 1 == f.j && f.j <= k;
      default:
        return false;
    }
  };
  return minimize(build_automaton(z.alphabet(), k, spec).automaton);
}

void check_truncation(const RankedAlphabet& sigma, int k, int R) {
  if (R < k + 1) throw RankOverflow("truncation " + std::to_string(R) + " is below k+1 = " + std::to_string(k + 1));
  if (R < sigma.max_arity())
    throw RankOverflow("truncation " + std::to_string(R) + " is below the largest arity " +
                       std::to_string(sigma.max_arity()));
}

// Encoded tuple of values of several algebras: [rank, len, key..., len, key...].
AKey encode(int rank, const std::vector<Key>& keys) {
  AKey out{rank};
  for (const auto& k : keys) {
    out.push_back(static_cast<std::int64_t>(k.size()));
    for (auto x : k) out.push_back(x);
  }
  return out;
}

std::vector<Key> decode(const AKey& key, std::size_t parts) {
  std::vector<Key> out(parts);
  std::size_t pos = 1;
  for (std::size_t p = 0; p < parts; ++p) {
    auto len = static_cast<std::size_t>(key[pos++]);
    out[p].reserve(len);
    for (std::size_t i = 0; i < len; ++i) out[p].push_back(static_cast<std::uint32_t>(key[pos++]));
  }
  return out;
}

class Compiler {
 public:
  Compiler(AlphabetPtr sigma, int k, CompileOptions opt) : sigma_(std::move(sigma)), k_(k), opt_(opt) {
    R_ = opt_.truncation > 0 ? opt_.truncation : default_truncation(*sigma_, k_);
    check_truncation(*sigma_, k_, R_);
  }

  RecognizerPtr run(const FormulaPtr& phi, std::vector<std::string> vars) {
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    for (const auto& v : free_vars(*phi))
      if (!std::binary_search(vars.begin(), vars.end(), v)) throw Error("free variable " + v + " is not in the variable set");
    auto key = std::make_pair(phi.get(), vars);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second.second;
    RecognizerPtr rec = build(phi, vars);
    cache_.emplace(key, std::make_pair(phi, rec));
    return rec;
  }

  int truncation() const { return R_; }

 private:
  ExtendedAlphabetPtr alphabet(const std::vector<std::string>& vars) {
    auto it = alphabets_.find(vars);
    if (it != alphabets_.end()) return it->second;
    auto z = std::make_shared<const ExtendedAlphabet>(sigma_, vars);
    alphabets_.emplace(vars, z);
    return z;
  }

  RecognizerPtr build(const FormulaPtr& phi, const std::vector<std::string>& vars) {
    const Formula& f = *phi;
    auto z = alphabet(vars);
    switch (f.kind) {
      case Kind::Not: {
        auto inner = run(f.args[0], vars);
        auto rec = std::make_shared<CompiledRecognizer>(*inner);
        rec->kind = "not";
        rec->quant = nullptr;
        auto acc = inner->accepting;
        int k = k_;
        rec->accepting = [acc, k](const Value& v) { return v.rank == k && !acc(v); };
        return rec;
      }
      case Kind::And:
      case Kind::Or: {
        auto a = run(f.args[0], vars), b = run(f.args[1], vars);
        auto alg = std::make_shared<ProductAlgebra>(std::vector<AlgebraPtr>{a->algebra, b->algebra});
        auto rec = std::make_shared<CompiledRecognizer>();
        rec->algebra = alg;
        rec->alphabet = z;
        rec->rank = k_;
        rec->truncation = alg->truncation();
        rec->kind = f.kind == Kind::And ? "and" : "or";
        for (std::size_t l = 0; l < a->gamma.size(); ++l) {
          std::vector<Key> parts{a->gamma[l].key, b->gamma[l].key};
          rec->gamma.push_back({a->gamma[l].rank, ProductAlgebra::pack(parts)});
        }
        auto accA = a->accepting, accB = b->accepting;
        bool conj = f.kind == Kind::And;
        rec->accepting = [accA, accB, conj](const Value& v) {
          bool x = accA({v.rank, ProductAlgebra::component(v.key, 0)});
          bool y = accB({v.rank, ProductAlgebra::component(v.key, 1)});
          return conj ? (x && y) : (x || y);
        };
        return rec;
      }
      case Kind::Quant:
        return quantifier(f, vars);
      default:
        return from_automaton(atom_automaton(f, *z, k_), z, k_, R_, "atom");
    }
  }

  const SyntacticResult& syntactic(const LanguagePtr& lang) {
    auto it = syntactic_.find(lang.get());
    if (it != syntactic_.end()) return it->second.second;
    auto res = syntactic_pgpair(*lang->automaton, R_, opt_.budget);
    return syntactic_.emplace(lang.get(), std::make_pair(lang, std::move(res))).first->second.second;
  }

  RecognizerPtr quantifier(const Formula& f, const std::vector<std::string>& vars) {
    const Quantifier& q = *f.q;
    const auto& lang = q.lang;
    if (std::binary_search(vars.begin(), vars.end(), q.var))
      throw Error("bound variable " + q.var + " is also free; rename it");
    if (lang->rank != k_)
      throw Error("language " + lang->name + " has rank " + std::to_string(lang->rank) + ", expected " +
                  std::to_string(k_));
    const RankedAlphabet& delta = *lang->delta;
    for (const auto& s : sigma_->symbols())
      if (!delta.has_arity(s.arity))
        throw Error("alphabet of " + lang->name + " has no letter of rank " + std::to_string(s.arity));
    if (!lang->automaton) {
      if (!lang->definition) throw Error("language " + lang->name + " is undefined");
      // a defined language is flattened: Q_{L_ψ} x ⟨φ_δ⟩ ≡ ψ̃
      return run(tilde_substitute(lang->definition, delta, q.family, q.var, *sigma_), vars);
    }

    std::vector<std::string> inner = vars;
    inner.push_back(q.var);
    std::sort(inner.begin(), inner.end());
    auto z = alphabet(vars);
    auto zi = alphabet(inner);

    // recognizers of the family members over Y ∪ {x}, grouped by algebra
    std::vector<RecognizerPtr> recs;
    std::vector<RecognizerPtr> parts;
    std::vector<std::size_t> partOf;
    for (const auto& member : q.family) {
      auto r = run(member, inner);
      recs.push_back(r);
      std::size_t p = 0;
      while (p < parts.size() && parts[p]->algebra != r->algebra) ++p;
      if (p == parts.size()) parts.push_back(r);
      partOf.push_back(p);
    }

    // joint automaton on tuples of values of rank <= k
    int k = k_;
    BuilderSpec spec;
    spec.var_key = [&](int) {
      std::vector<Key> keys;
      for (const auto& p : parts) keys.push_back(p->algebra->unit());
      return encode(1, keys);
    };
    spec.step = [&](int letter, std::span<const AKey* const> ch) -> AKey {
      int total = 0;
      for (const AKey* c : ch) {
        if ((*c)[0] < 0) return {-1};
        total += static_cast<int>((*c)[0]);
      }
      if (total > k) return {-1};
      std::vector<std::vector<Key>> childKeys;
      for (const AKey* c : ch) childKeys.push_back(decode(*c, parts.size()));
      std::vector<Key> out;
      std::vector<ValueRef> refs(ch.size());
      for (std::size_t p = 0; p < parts.size(); ++p) {
        for (std::size_t i = 0; i < ch.size(); ++i) refs[i] = {static_cast<int>((*ch[i])[0]), &childKeys[i][p]};
        const Value& g = parts[p]->gamma[static_cast<std::size_t>(letter)];
        out.push_back(parts[p]->algebra->compose(g.rank, g.key, refs));
      }
      return encode(total, out);
    };
    spec.is_final = [](const AKey&) { return false; };
    auto built = build_automaton(zi->alphabet(), k, spec);

    // colour: rank and, at rank k, which φ_δ accept
    std::map<std::vector<int>, int> colourOf;
    std::vector<std::vector<int>> colourKey;
    std::vector<int> colour;
    for (const auto& key : built.keys) {
      std::vector<int> c;
      if (key[0] < 0) {
        c = {-1};
      } else {
        int rank = static_cast<int>(key[0]);
        c = {rank};
        if (rank == k) {
          auto keys = decode(key, parts.size());
          for (std::size_t d = 0; d < recs.size(); ++d) c.push_back(recs[d]->accepting({rank, keys[partOf[d]]}) ? 1 : 0);
        }
      }
      auto [it, fresh] = colourOf.emplace(c, static_cast<int>(colourKey.size()));
      if (fresh) colourKey.push_back(c);
      colour.push_back(it->second);
    }
    auto minimal = minimize_colored(built.automaton, colour);
    auto qp = std::make_shared<QuantifierParts>();
    qp->inner = zi;
    qp->t = transformation_pgpair(minimal.automaton, R_, opt_.budget);
    const FinitaryPreclone& T = *qp->t.pg.preclone;
    const auto& talg = static_cast<const TransformationAlgebra&>(T.algebra());
    std::vector<int> vs;
    for (int j = 1; j <= k; ++j) vs.push_back(minimal.automaton.var_state(j));

    // τ(L_{φ_δ}) on rank-k elements of T
    std::size_t nk = T.sort_size(k);
    qp->accepted.assign(recs.size(), std::vector<bool>(nk, false));
    for (std::uint32_t e = 0; e < nk; ++e) {
      int state = static_cast<int>(talg.apply(T.key({k, e}), vs));
      const auto& c = colourKey[static_cast<std::size_t>(minimal.color[static_cast<std::size_t>(state)])];
      if (c[0] != k) throw Error("rank-k element of T evaluates to a state of another rank");
      for (std::size_t d = 0; d < recs.size(); ++d) qp->accepted[d][e] = c[1 + d] != 0;
    }
    qp->valid = valid_images(T, qp->t.morphism, *zi, q.var);

    // (S, A) and the block product
    const SyntacticResult& S = syntactic(lang);
    qp->s = S;
    qp->block = std::make_shared<BlockAlgebra>(S.pg.preclone, qp->t.pg.preclone, k);
    const BlockAlgebra& block = *qp->block;

    std::vector<std::optional<std::uint32_t>> fallback(static_cast<std::size_t>(R_) + 1);
    for (Elem g : S.pg.generators)
      if (!fallback[static_cast<std::size_t>(g.rank)] || g.index < *fallback[static_cast<std::size_t>(g.rank)])
        fallback[static_cast<std::size_t>(g.rank)] = g.index;

    int xbit = zi->var_index(q.var);
    auto rec = std::make_shared<CompiledRecognizer>();
    rec->algebra = qp->block;
    rec->alphabet = z;
    rec->rank = k;
    rec->truncation = block.truncation();
    rec->kind = "quantifier";
    const RankedAlphabet& sz = *z->alphabet();
    for (int l = 0; l < static_cast<int>(sz.size()); ++l) {
      int n = sz[l].arity;
      int sym = z->symbol_of(l);
      std::uint32_t mask = 0, zmask = z->mask_of(l);
      for (std::size_t v = 0; v < vars.size(); ++v)
        if (zmask >> v & 1u) mask |= 1u << zi->var_index(vars[v]);
      Elem plain = qp->t.morphism.image[static_cast<std::size_t>(zi->letter(sym, mask))];
      Elem marked = qp->t.morphism.image[static_cast<std::size_t>(zi->letter(sym, mask | (1u << xbit)))];
      BlockElement be;
      be.rank = n;
      be.f = plain.index;
      const ContextTable& I = block.contexts(n);
      be.F.reserve(I.size());
      for (std::size_t ci = 0; ci < I.size(); ++ci) {
        Elem e = apply_context(T, marked, I[ci]);
        std::optional<std::uint32_t> value;
        if (qp->valid[static_cast<std::size_t>(n)][e.index]) {
          int count = 0;
          for (int d : delta.symbols_of_arity(n))
            if (qp->accepted[static_cast<std::size_t>(d)][e.index]) {
              ++count;
              value = S.morphism.image[static_cast<std::size_t>(d)].index;
            }
          if (count != 1)
            throw DeterminismViolation("family of Q[" + lang->name + "] is not deterministic with respect to " + q.var +
                                       ": " + std::to_string(count) + " formulas hold at a node of rank " +
                                       std::to_string(n));
        }
        if (!value) {
          if (!fallback[static_cast<std::size_t>(n)]) throw Error("no generator of rank " + std::to_string(n) + " in A");
          value = fallback[static_cast<std::size_t>(n)];
        }
        be.F.push_back(*value);
      }
      rec->gamma.push_back(be.to_value());
    }
    std::size_t id = block.identity_context();
    std::vector<bool> alphaK = S.accepting;
    rec->accepting = [alphaK, id, k](const Value& v) { return v.rank == k && alphaK[v.key[1 + id]]; };
    rec->quant = qp;
    return rec;
  }

  // Images in T of Y∪{x}-structures of rank k, split by the rank of the
  // node carrying x. Reachability over (element, variables used, x-rank).
  std::vector<std::vector<bool>> valid_images(const FinitaryPreclone& T, const Morphism& tau, const ExtendedAlphabet& zi,
                                              const std::string& x) {
    struct Item {
      Elem e;
      std::uint32_t used;
      int xRank;
      auto operator<=>(const Item&) const = default;
    };
    int k = k_;
    int xbit = zi.var_index(x);
    std::uint32_t full = (1u << zi.vars().size()) - 1;
    std::vector<Item> items;
    std::set<Item> seen;
    auto add = [&](const Item& it) {
      if (seen.insert(it).second) items.push_back(it);
    };
    if (k >= 1) add({T.unit(), 0, -1});
    const RankedAlphabet& a = *zi.alphabet();
    std::size_t done = 0;
    // semi-naive: each round combines tuples using at least one new item
    bool first = true;
    while (first || done < items.size()) {
      std::size_t old = first ? 0 : done;
      std::size_t end = items.size();
      first = false;
      for (int l = 0; l < static_cast<int>(a.size()); ++l) {
        int n = a[l].arity;
        std::uint32_t m = zi.mask_of(l);
        int xr = (m >> xbit & 1u) ? n : -1;
        Elem g = tau.image[static_cast<std::size_t>(l)];
        if (n == 0) {
          if (old == 0) add({g, m, xr});
          continue;
        }
        if (end == 0) continue;
        std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
        std::vector<Elem> args(static_cast<std::size_t>(n));
        for (;;) {
          bool fresh = false;
          int total = 0;
          std::uint32_t used = m;
          int xRank = xr;
          bool ok = true;
          for (std::size_t i = 0; i < idx.size() && ok; ++i) {
            const Item& c = items[idx[i]];
            fresh = fresh || idx[i] >= old;
            total += c.e.rank;
            if (used & c.used) ok = false;
            used |= c.used;
            if (c.xRank >= 0) xRank = c.xRank;
            args[i] = c.e;
          }
          if (ok && fresh && total <= k) add({T.compose(g, args), used, xRank});
          std::size_t p = 0;
          while (p < idx.size() && ++idx[p] == end) idx[p++] = 0;
          if (p == idx.size()) break;
        }
      }
      done = end;
      if (items.size() > opt_.budget * 10) throw BudgetExceeded("validity closure exceeds the budget");
    }
    std::vector<std::vector<bool>> valid(static_cast<std::size_t>(R_) + 1, std::vector<bool>(T.sort_size(k), false));
    for (const auto& it : items)
      if (it.e.rank == k && it.used == full && it.xRank >= 0) valid[static_cast<std::size_t>(it.xRank)][it.e.index] = true;
    return valid;
  }

  AlphabetPtr sigma_;
  int k_;
  CompileOptions opt_;
  int R_ = 0;
  std::map<std::pair<const Formula*, std::vector<std::string>>, std::pair<FormulaPtr, RecognizerPtr>> cache_;
  std::map<std::vector<std::string>, ExtendedAlphabetPtr> alphabets_;
  std::map<const Language*, std::pair<LanguagePtr, SyntacticResult>> syntactic_;
};

}  // namespace

RecognizerPtr compile_atomic(const Formula& phi, const AlphabetPtr& sigma, const std::vector<std::string>& vars, int k,
                             int R) {
  if (!is_atomic(phi)) throw Error("compile_atomic needs an atomic formula");
  check_truncation(*sigma, k, R);
  auto z = std::make_shared<const ExtendedAlphabet>(sigma, vars);
  return from_automaton(atom_automaton(phi, *z, k), z, k, R, "atom");
}

RecognizerPtr compile(const FormulaPtr& phi, const AlphabetPtr& sigma, const std::vector<std::string>& vars, int k,
                      const CompileOptions& options) {
  Compiler c(sigma, k, options);
  return c.run(phi, vars);
}

TreeAutomaton recognizer_automaton(const CompiledRecognizer& rec, std::size_t budget) {
  int k = rec.rank;
  const Algebra& alg = *rec.algebra;
  BuilderSpec spec;
  spec.var_key = [&](int) { return encode(1, {alg.unit()}); };
  spec.step = [&](int letter, std::span<const AKey* const> ch) -> AKey {
    int total = 0;
    for (const AKey* c : ch) {
      if ((*c)[0] < 0) return {-1};
      total += static_cast<int>((*c)[0]);
    }
    if (total > k) return {-1};
    std::vector<Key> keys;
    for (const AKey* c : ch) keys.push_back(decode(*c, 1)[0]);
    std::vector<ValueRef> refs;
    for (std::size_t i = 0; i < ch.size(); ++i) refs.push_back({static_cast<int>((*ch[i])[0]), &keys[i]});
    const Value& g = rec.gamma[static_cast<std::size_t>(letter)];
    return encode(total, {alg.compose(g.rank, g.key, refs)});
  };
  spec.is_final = [&](const AKey& key) {
    if (key[0] != k) return false;
    return rec.accepting({k, decode(key, 1)[0]});
  };
  return minimize(build_automaton(rec.alphabet->alphabet(), k, spec, budget).automaton);
}

ClosureResult materialize(const CompiledRecognizer& rec, std::size_t budget) {
  return closure(rec.algebra, rec.gamma, rec.truncation, budget);
}

EquivalenceReport check_equivalence(const Formula& phi, const CompiledRecognizer& rec, int maxNV, std::size_t keep) {
  EquivalenceReport rep;
  const auto& base = *rec.alphabet->base();
  for (const auto& t : enumerate_trees(base, rec.rank, maxNV)) {
    for_each_interpretation(t, rec.vars(), [&](const Interpretation& l) {
      bool want = satisfies(t, l, phi);
      bool got = membership(rec, t, l);
      ++rep.checked;
      if (got) ++rep.accepted;
      if (want != got) {
        ++rep.mismatch_count;
        if (rep.mismatches.size() < keep) rep.mismatches.push_back({t.to_string(base), l, want});
      }
    });
  }
  return rep;
}

LanguagePtr language_via_automaton(const Language& lang, const CompileOptions& options) {
  if (lang.automaton) return std::make_shared<Language>(lang);
  if (!lang.definition) throw Error("language " + lang.name + " is undefined");
  auto rec = compile(lang.definition, lang.delta, {}, lang.rank, options);
  TreeAutomaton a = recognizer_automaton(*rec);
  // Σ_∅ has the letters of Δ with the same ids
  TreeAutomaton b(lang.delta, a.rank(), a.states());
  for (int j = 1; j <= a.rank(); ++j) b.set_var_state(j, a.var_state(j));
  for (int q = 0; q < a.states(); ++q) b.set_final(q, a.is_final(q));
  for (int s = 0; s < static_cast<int>(lang.delta->size()); ++s) {
    int n = (*lang.delta)[s].arity;
    const auto& tab = a.table(s);
    std::vector<int> args(static_cast<std::size_t>(n));
    for (std::size_t idx = 0; idx < tab.size(); ++idx) {
      std::size_t rest = idx;
      for (int i = n - 1; i >= 0; --i) {
        args[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(a.states()));
        rest /= static_cast<std::size_t>(a.states());
      }
      b.set_step(s, args, tab[idx]);
    }
  }
  auto out = std::make_shared<Language>(lang);
  out->automaton = std::make_shared<const TreeAutomaton>(std::move(b));
  return out;
}

}  // namespace lind
