#include "lind/logic.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>

namespace lind {

// ---------------------------------------------------------------- builders

namespace {

FormulaPtr make(Formula f) { return std::make_shared<const Formula>(std::move(f)); }

Formula atom(Kind k, std::string x = {}, std::string y = {}) {
  Formula f;
  f.kind = k;
  f.x = std::move(x);
  f.y = std::move(y);
  return f;
}

}  // namespace

FormulaPtr f_true() {
  static const FormulaPtr t = make(atom(Kind::True));
  return t;
}

FormulaPtr f_false() {
  static const FormulaPtr f = make(atom(Kind::False));
  return f;
}

FormulaPtr f_label(int symbol, std::string x) {
  Formula f = atom(Kind::Label, std::move(x));
  f.symbol = symbol;
  return make(std::move(f));
}

FormulaPtr f_less(std::string x, std::string y) { return make(atom(Kind::Less, std::move(x), std::move(y))); }

FormulaPtr f_succ(int i, std::string x, std::string y) {
  Formula f = atom(Kind::Succ, std::move(x), std::move(y));
  f.i = i;
  return make(std::move(f));
}

FormulaPtr f_root(std::string x) { return make(atom(Kind::Root, std::move(x))); }

FormulaPtr f_max(int i, int j, std::string x) {
  Formula f = atom(Kind::Max, std::move(x));
  f.i = i;
  f.j = j;
  return make(std::move(f));
}

FormulaPtr f_left(int j, std::string x) {
  Formula f = atom(Kind::Left, std::move(x));
  f.j = j;
  return make(std::move(f));
}

FormulaPtr f_right(int j, std::string x) {
  Formula f = atom(Kind::Right, std::move(x));
  f.j = j;
  return make(std::move(f));
}

FormulaPtr f_not(FormulaPtr a) {
  Formula f;
  f.kind = Kind::Not;
  f.args = {std::move(a)};
  return make(std::move(f));
}

FormulaPtr f_and(FormulaPtr a, FormulaPtr b) {
  Formula f;
  f.kind = Kind::And;
  f.args = {std::move(a), std::move(b)};
  return make(std::move(f));
}

FormulaPtr f_or(FormulaPtr a, FormulaPtr b) {
  Formula f;
  f.kind = Kind::Or;
  f.args = {std::move(a), std::move(b)};
  return make(std::move(f));
}

FormulaPtr f_quant(LanguagePtr lang, std::string var, std::vector<FormulaPtr> family, std::string sugar, FormulaPtr body) {
  if (family.size() != lang->delta->size()) throw Error("quantifier family does not cover the alphabet of " + lang->name);
  auto q = std::make_shared<Quantifier>();
  q->lang = std::move(lang);
  q->var = std::move(var);
  q->family = std::move(family);
  q->sugar = std::move(sugar);
  q->body = std::move(body);
  Formula f;
  f.kind = Kind::Quant;
  f.q = std::move(q);
  return make(std::move(f));
}

bool Language::contains(const RankedTree& t) const {
  if (automaton) return automaton->accepts(t);
  if (definition) return satisfies(t, {}, *definition);
  throw Error("language " + name + " has neither an automaton nor a definition");
}

LanguagePtr automaton_language(std::string name, TreeAutomaton a) {
  auto l = std::make_shared<Language>();
  l->name = std::move(name);
  l->delta = a.alphabet();
  l->rank = a.rank();
  l->automaton = std::make_shared<const TreeAutomaton>(std::move(a));
  return l;
}

std::vector<FormulaPtr> boolean_family(const RankedAlphabet& delta, FormulaPtr phi) {
  if (!is_boolean_alphabet(delta)) throw Error("Boolean family needs a Boolean alphabet");
  FormulaPtr neg = f_not(phi);
  std::vector<FormulaPtr> out;
  for (const auto& s : delta.symbols()) out.push_back(s.name[0] == '1' ? phi : neg);
  return out;
}

namespace {

// Builtin languages are shared per (Σ, k, kind) so compiled recognizers can
// be cached by language identity.
LanguagePtr builtin_language(const AlphabetPtr& sigma, int k, const std::string& kind, int p = 0, int r = 0) {
  static std::mutex mu;
  static std::map<std::string, LanguagePtr> cache;
  std::string key = sigma->to_string() + "|" + std::to_string(k) + "|" + kind + "|" + std::to_string(p) + "|" +
                    std::to_string(r);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  AlphabetPtr delta = boolean_alphabet(*sigma);
  LanguagePtr l;
  if (kind == "exists")
    l = automaton_language("exists", builtin_K_exists(delta, k));
  else if (kind == "mod")
    l = automaton_language("mod_" + std::to_string(p) + "_" + std::to_string(r), builtin_K_mod(delta, k, p, r));
  else if (kind == "path")
    l = automaton_language("path", builtin_K_path(delta, k));
  else if (kind == "forall_next")
    l = automaton_language("forall_next", builtin_K_forall_next(delta, k));
  else
    throw Error("unknown builtin language " + kind);
  cache.emplace(key, l);
  return l;
}

}  // namespace

FormulaPtr desugar_exists(const std::string& x, FormulaPtr phi, const AlphabetPtr& sigma, int k) {
  auto lang = builtin_language(sigma, k, "exists");
  return f_quant(lang, x, boolean_family(*lang->delta, phi), "exists", phi);
}

FormulaPtr desugar_mod(int p, int r, const std::string& x, FormulaPtr phi, const AlphabetPtr& sigma, int k) {
  if (p < 1 || r < 0 || r >= p) throw Error("mod quantifier needs 0 <= r < p");
  auto lang = builtin_language(sigma, k, "mod", p, r);
  return f_quant(lang, x, boolean_family(*lang->delta, phi), "mod " + std::to_string(p) + " " + std::to_string(r), phi);
}

// ---------------------------------------------------------------- variables

namespace {

void collect_vars(const Formula& f, std::set<std::string>& bound, std::set<std::string>& out, bool freeOnly) {
  auto use = [&](const std::string& v) {
    if (!v.empty() && (!freeOnly || !bound.count(v))) out.insert(v);
  };
  switch (f.kind) {
    case Kind::True:
    case Kind::False:
      return;
    case Kind::Not:
    case Kind::And:
    case Kind::Or:
      for (const auto& a : f.args) collect_vars(*a, bound, out, freeOnly);
      return;
    case Kind::Quant: {
      bool fresh = bound.insert(f.q->var).second;
      if (!freeOnly) out.insert(f.q->var);
      for (const auto& m : f.q->family) collect_vars(*m, bound, out, freeOnly);
      if (fresh) bound.erase(f.q->var);
      return;
    }
    default:
      use(f.x);
      use(f.y);
  }
}

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid) {
  std::string stem = base;
  auto us = stem.rfind('_');
  if (us != std::string::npos && us + 1 < stem.size() &&
      std::all_of(stem.begin() + static_cast<std::ptrdiff_t>(us) + 1, stem.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    stem = stem.substr(0, us);
  for (int n = 1;; ++n) {
    std::string cand = stem + "_" + std::to_string(n);
    if (!avoid.count(cand)) return cand;
  }
}

}  // namespace

std::set<std::string> free_vars(const Formula& f) {
  std::set<std::string> bound, out;
  collect_vars(f, bound, out, true);
  return out;
}

std::set<std::string> all_vars(const Formula& f) {
  std::set<std::string> bound, out;
  collect_vars(f, bound, out, false);
  return out;
}

bool is_atomic(const Formula& f) {
  switch (f.kind) {
    case Kind::Not:
    case Kind::And:
    case Kind::Or:
    case Kind::Quant:
      return false;
    default:
      return true;
  }
}

// ---------------------------------------------------------------- printing

std::string to_string(const Formula& f, const RankedAlphabet& sigma) {
  switch (f.kind) {
    case Kind::True:
      return "true";
    case Kind::False:
      return "false";
    case Kind::Label:
      return "P[" + sigma[f.symbol].name + "](" + f.x + ")";
    case Kind::Less:
      return f.x + "<" + f.y;
    case Kind::Succ:
      return "succ_" + std::to_string(f.i) + "(" + f.x + "," + f.y + ")";
    case Kind::Root:
      return "root(" + f.x + ")";
    case Kind::Max:
      return "max[" + std::to_string(f.i) + "," + std::to_string(f.j) + "](" + f.x + ")";
    case Kind::Left:
      return "left[" + std::to_string(f.j) + "](" + f.x + ")";
    case Kind::Right:
      return "right[" + std::to_string(f.j) + "](" + f.x + ")";
    case Kind::Not:
      return "!" + to_string(*f.args[0], sigma);
    case Kind::And:
      return "(" + to_string(*f.args[0], sigma) + " & " + to_string(*f.args[1], sigma) + ")";
    case Kind::Or:
      return "(" + to_string(*f.args[0], sigma) + " | " + to_string(*f.args[1], sigma) + ")";
    case Kind::Quant: {
      const auto& q = *f.q;
      if (q.body && q.sugar == "exists") return "(exists " + q.var + ". " + to_string(*q.body, sigma) + ")";
      if (q.body && q.sugar.rfind("mod ", 0) == 0) {
        std::istringstream in(q.sugar.substr(4));
        int p = 0, r = 0;
        in >> p >> r;
        return "(mod[" + std::to_string(p) + "," + std::to_string(r) + "] " + q.var + ". " + to_string(*q.body, sigma) + ")";
      }
      std::string out = "Q[" + q.lang->name + "] " + q.var + " {";
      for (std::size_t d = 0; d < q.family.size(); ++d)
        out += (d ? "; " : " ") + (*q.lang->delta)[static_cast<int>(d)].name + ": " + to_string(*q.family[d], sigma);
      return out + " }";
    }
  }
  return "?";
}

// ---------------------------------------------------------------- semantics

namespace {

struct View {
  const RankedTree& t;
  int k;
  std::vector<std::size_t> end, parent;
  std::vector<int> childIndex, before, inside, varNo;
  std::vector<std::vector<std::size_t>> kids;

  explicit View(const RankedTree& tree) : t(tree), k(tree.rank()) {
    std::size_t n = t.size();
    end.assign(n, 0);
    parent.assign(n, SIZE_MAX);
    childIndex.assign(n, 0);
    before.assign(n, 0);
    inside.assign(n, 0);
    varNo.assign(n, 0);
    kids.assign(n, {});
    int vars = 0;
    auto rec = [&](auto&& self, std::size_t i) -> std::size_t {
      before[i] = vars;
      std::size_t next = i + 1;
      if (t.is_var(i)) {
        varNo[i] = ++vars;
      } else {
        for (int c = 0; c < t.node(i).arity; ++c) {
          kids[i].push_back(next);
          parent[next] = i;
          childIndex[next] = c + 1;
          next = self(self, next);
        }
      }
      inside[i] = vars - before[i];
      end[i] = next;
      return next;
    };
    rec(rec, 0);
  }
};

std::size_t lookup(const Interpretation& l, const std::string& x) {
  auto it = l.find(x);
  if (it == l.end()) throw Error("free variable " + x + " is not interpreted");
  return it->second;
}

bool eval(const View& v, Interpretation& l, const Formula& f);

RankedTree char_tree(const View& v, Interpretation& l, const Quantifier& q) {
  const auto& t = v.t;
  const auto& delta = *q.lang->delta;
  std::vector<RankedTree::Node> nodes = t.nodes();
  // restores the outer binding of q.var on exit
  struct Restore {
    Interpretation& l;
    const std::string& var;
    bool had;
    std::size_t old;
    ~Restore() {
      if (had)
        l[var] = old;
      else
        l.erase(var);
    }
  } restore{l, q.var, l.count(q.var) > 0, l.count(q.var) ? l.at(q.var) : 0};
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.is_var(i)) continue;
    int n = t.node(i).arity;
    l[q.var] = i;
    int chosen = -1, count = 0;
    std::vector<int> held;
    for (int d : delta.symbols_of_arity(n)) {
      if (eval(v, l, *q.family[static_cast<std::size_t>(d)])) {
        chosen = d;
        ++count;
        held.push_back(d);
      }
    }
    if (count != 1) {
      std::string msg = "family of Q[" + q.lang->name + "] is not deterministic with respect to " + q.var + " at node " +
                        std::to_string(i) + ": " + std::to_string(count) + " formulas of rank " + std::to_string(n) +
                        " hold";
      throw DeterminismViolation(msg);
    }
    nodes[i].label = chosen;
  }
  return RankedTree::from_nodes(std::move(nodes));
}

bool eval(const View& v, Interpretation& l, const Formula& f) {
  const auto& t = v.t;
  switch (f.kind) {
    case Kind::True:
      return true;
    case Kind::False:
      return false;
    case Kind::Label:
      return t.node(lookup(l, f.x)).label == f.symbol;
    case Kind::Less: {
      std::size_t a = lookup(l, f.x), b = lookup(l, f.y);
      return b > a && b < v.end[a];
    }
    case Kind::Succ: {
      std::size_t a = lookup(l, f.x), b = lookup(l, f.y);
      return v.parent[b] == a && v.childIndex[b] == f.i;
    }
    case Kind::Root:
      return lookup(l, f.x) == 0;
    case Kind::Max: {
      std::size_t a = lookup(l, f.x);
      if (static_cast<int>(v.kids[a].size()) < f.i) return false;
      std::size_t c = v.kids[a][static_cast<std::size_t>(f.i - 1)];
      return t.is_var(c) && v.varNo[c] == f.j;
    }
    case Kind::Left:
      return f.j >= 1 && v.before[lookup(l, f.x)] == f.j;
    case Kind::Right: {
      std::size_t a = lookup(l, f.x);
      return f.j <= v.k && v.before[a] + v.inside[a] + 1 == f.j;
    }
    case Kind::Not:
      return !eval(v, l, *f.args[0]);
    case Kind::And:
      return eval(v, l, *f.args[0]) && eval(v, l, *f.args[1]);
    case Kind::Or:
      return eval(v, l, *f.args[0]) || eval(v, l, *f.args[1]);
    case Kind::Quant:
      return f.q->lang->contains(char_tree(v, l, *f.q));
  }
  return false;
}

}  // namespace

bool satisfies(const RankedTree& t, const Interpretation& lambda, const Formula& phi) {
  View v(t);
  for (const auto& [name, node] : lambda)
    if (node >= t.size() || t.is_var(node)) throw Error("variable " + name + " is not interpreted by a labelled node");
  Interpretation l = lambda;
  return eval(v, l, phi);
}

RankedTree characteristic_tree(const RankedTree& t, const Interpretation& lambda, const Quantifier& q) {
  View v(t);
  Interpretation l = lambda;
  return char_tree(v, l, q);
}

void for_each_interpretation(const RankedTree& t, const std::vector<std::string>& vars,
                             const std::function<void(const Interpretation&)>& fn) {
  std::vector<std::size_t> nv = t.nv_nodes();
  Interpretation l;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == vars.size()) {
      fn(l);
      return;
    }
    for (std::size_t node : nv) {
      l[vars[i]] = node;
      self(self, i + 1);
    }
    l.erase(vars[i]);
  };
  rec(rec, 0);
}

std::optional<DeterminismWitness> check_deterministic(const RankedAlphabet& delta, const std::vector<FormulaPtr>& family,
                                                      const std::string& x, const AlphabetPtr& sigma, int k, int maxNV) {
  std::set<std::string> fv;
  for (const auto& m : family)
    for (const auto& v : free_vars(*m)) fv.insert(v);
  fv.erase(x);
  std::vector<std::string> vars(fv.begin(), fv.end());
  for (const auto& t : enumerate_trees(*sigma, k, maxNV)) {
    View view(t);
    std::optional<DeterminismWitness> found;
    for_each_interpretation(t, vars, [&](const Interpretation& lambda) {
      if (found) return;
      Interpretation l = lambda;
      for (std::size_t node : t.nv_nodes()) {
        int n = t.node(node).arity;
        if (delta.symbols_of_arity(n).empty()) continue;
        l[x] = node;
        std::vector<int> held;
        for (int d : delta.symbols_of_arity(n))
          if (eval(view, l, *family[static_cast<std::size_t>(d)])) held.push_back(d);
        if (held.size() != 1) {
          found = DeterminismWitness{t, lambda, node, held};
          return;
        }
      }
    });
    if (found) return found;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- structures

ExtendedAlphabet::ExtendedAlphabet(AlphabetPtr base, std::vector<std::string> vars)
    : base_(std::move(base)), vars_(std::move(vars)) {
  std::sort(vars_.begin(), vars_.end());
  vars_.erase(std::unique(vars_.begin(), vars_.end()), vars_.end());
  if (vars_.size() > 12) throw Error("too many free variables for an extended alphabet");
  std::vector<Symbol> syms;
  std::uint32_t masks = 1u << vars_.size();
  for (const auto& s : base_->symbols())
    for (std::uint32_t m = 0; m < masks; ++m) {
      std::string name = s.name;
      if (m) {
        name += "{";
        bool first = true;
        for (std::size_t z = 0; z < vars_.size(); ++z)
          if (m >> z & 1u) {
            name += (first ? "" : ",") + vars_[z];
            first = false;
          }
        name += "}";
      }
      syms.push_back({name, s.arity});
    }
  alphabet_ = std::make_shared<const RankedAlphabet>(std::move(syms));
}

int ExtendedAlphabet::var_index(const std::string& z) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), z);
  return it != vars_.end() && *it == z ? static_cast<int>(it - vars_.begin()) : -1;
}

RankedTree mk_structure(const ExtendedAlphabet& z, const RankedTree& t, const Interpretation& lambda) {
  std::vector<std::uint32_t> mask(t.size(), 0);
  for (std::size_t i = 0; i < z.vars().size(); ++i) {
    auto it = lambda.find(z.vars()[i]);
    if (it == lambda.end()) throw Error("structure needs a position for " + z.vars()[i]);
    if (it->second >= t.size() || t.is_var(it->second)) throw Error("variable " + z.vars()[i] + " must sit at a labelled node");
    mask[it->second] |= 1u << i;
  }
  std::vector<RankedTree::Node> nodes = t.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].label != RankedTree::kVar) nodes[i].label = z.letter(nodes[i].label, mask[i]);
  return RankedTree::from_nodes(std::move(nodes));
}

std::pair<RankedTree, Interpretation> destructure(const ExtendedAlphabet& z, const RankedTree& s) {
  std::vector<int> seen(z.vars().size(), 0);
  Interpretation l;
  std::vector<RankedTree::Node> nodes = s.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].label == RankedTree::kVar) continue;
    std::uint32_t m = z.mask_of(nodes[i].label);
    for (std::size_t v = 0; v < z.vars().size(); ++v)
      if (m >> v & 1u) {
        ++seen[v];
        l[z.vars()[v]] = i;
      }
    nodes[i].label = z.symbol_of(nodes[i].label);
  }
  for (std::size_t v = 0; v < seen.size(); ++v)
    if (seen[v] != 1)
      throw Error("not a structure: " + z.vars()[v] + " occurs " + std::to_string(seen[v]) + " times");
  return {RankedTree::from_nodes(std::move(nodes)), l};
}

// ---------------------------------------------------------------- rewriting

namespace {

FormulaPtr with_quant(const Formula& f, std::string var, std::vector<FormulaPtr> family, FormulaPtr body) {
  return f_quant(f.q->lang, std::move(var), std::move(family), f.q->sugar, std::move(body));
}

FormulaPtr rename_atom(const Formula& f, const std::string& q, const std::string& p) {
  Formula g = f;
  if (g.x == p) g.x = q;
  if (g.y == p) g.y = q;
  return make(std::move(g));
}

FormulaPtr subst(const FormulaPtr& chi, const std::string& q, const std::string& p) {
  const Formula& f = *chi;
  switch (f.kind) {
    case Kind::True:
    case Kind::False:
      return chi;
    case Kind::Not:
      return f_not(subst(f.args[0], q, p));
    case Kind::And:
      return f_and(subst(f.args[0], q, p), subst(f.args[1], q, p));
    case Kind::Or:
      return f_or(subst(f.args[0], q, p), subst(f.args[1], q, p));
    case Kind::Quant: {
      if (f.q->var == p) return chi;
      if (!free_vars(f).count(p)) return chi;
      std::string var = f.q->var;
      std::vector<FormulaPtr> fam = f.q->family;
      FormulaPtr body = f.q->body;
      if (var == q) {
        // rename the bound q out of the way first
        std::set<std::string> avoid = all_vars(f);
        avoid.insert(p);
        avoid.insert(q);
        std::string w = fresh_name(var, avoid);
        for (auto& m : fam) m = subst(m, w, var);
        if (body) body = subst(body, w, var);
        var = w;
      }
      for (auto& m : fam) m = subst(m, q, p);
      if (body) body = subst(body, q, p);
      return with_quant(f, var, std::move(fam), std::move(body));
    }
    default:
      return (f.x == p || f.y == p) ? rename_atom(f, q, p) : chi;
  }
}

// Renames bound variables of chi that appear in `avoid`.
FormulaPtr rename_bound(const FormulaPtr& chi, std::set<std::string>& avoid) {
  const Formula& f = *chi;
  switch (f.kind) {
    case Kind::Not:
      return f_not(rename_bound(f.args[0], avoid));
    case Kind::And:
      return f_and(rename_bound(f.args[0], avoid), rename_bound(f.args[1], avoid));
    case Kind::Or:
      return f_or(rename_bound(f.args[0], avoid), rename_bound(f.args[1], avoid));
    case Kind::Quant: {
      std::string var = f.q->var;
      std::vector<FormulaPtr> fam = f.q->family;
      FormulaPtr body = f.q->body;
      if (avoid.count(var)) {
        std::set<std::string> all = all_vars(f);
        all.insert(avoid.begin(), avoid.end());
        std::string w = fresh_name(var, all);
        for (auto& m : fam) m = subst(m, w, var);
        if (body) body = subst(body, w, var);
        var = w;
      }
      avoid.insert(var);
      for (auto& m : fam) m = rename_bound(m, avoid);
      if (body) body = rename_bound(body, avoid);
      return with_quant(f, var, std::move(fam), std::move(body));
    }
    default:
      return chi;
  }
}

struct TildeCtx {
  const RankedAlphabet& delta;
  const std::vector<FormulaPtr>& family;
  const std::string& x;
  const RankedAlphabet& sigma;
};

// z has rank n, as a disjunction of Σ_n labels; null when every letter has rank n
FormulaPtr rank_guard(const RankedAlphabet& sigma, int n, const std::string& z) {
  bool uniform = std::all_of(sigma.symbols().begin(), sigma.symbols().end(), [&](const Symbol& s) { return s.arity == n; });
  if (uniform) return nullptr;
  FormulaPtr out = f_false();
  for (int s : sigma.symbols_of_arity(n)) out = out->kind == Kind::False ? f_label(s, z) : f_or(out, f_label(s, z));
  return out;
}

FormulaPtr tilde(const FormulaPtr& chi, const TildeCtx& c) {
  const Formula& f = *chi;
  const auto& family = c.family;
  const auto& x = c.x;
  switch (f.kind) {
    case Kind::Label: {
      FormulaPtr body = subst(family.at(static_cast<std::size_t>(f.symbol)), f.x, x);
      FormulaPtr guard = rank_guard(c.sigma, c.delta[f.symbol].arity, f.x);
      return guard ? f_and(guard, body) : body;
    }
    case Kind::Not:
      return f_not(tilde(f.args[0], c));
    case Kind::And:
      return f_and(tilde(f.args[0], c), tilde(f.args[1], c));
    case Kind::Or:
      return f_or(tilde(f.args[0], c), tilde(f.args[1], c));
    case Kind::Quant: {
      std::vector<FormulaPtr> fam;
      for (const auto& m : f.q->family) fam.push_back(tilde(m, c));
      FormulaPtr body = f.q->body ? tilde(f.q->body, c) : nullptr;
      return with_quant(f, f.q->var, std::move(fam), std::move(body));
    }
    default:
      return chi;
  }
}

FormulaPtr inverse_image(const FormulaPtr& phi, const std::vector<int>& h) {
  const Formula& f = *phi;
  switch (f.kind) {
    case Kind::Label: {
      FormulaPtr out;
      for (std::size_t s = 0; s < h.size(); ++s)
        if (h[s] == f.symbol) {
          FormulaPtr a = f_label(static_cast<int>(s), f.x);
          out = out ? f_or(out, a) : a;
        }
      return out ? out : f_false();
    }
    case Kind::Not:
      return f_not(inverse_image(f.args[0], h));
    case Kind::And:
      return f_and(inverse_image(f.args[0], h), inverse_image(f.args[1], h));
    case Kind::Or:
      return f_or(inverse_image(f.args[0], h), inverse_image(f.args[1], h));
    case Kind::Quant: {
      std::vector<FormulaPtr> fam;
      for (const auto& m : f.q->family) fam.push_back(inverse_image(m, h));
      FormulaPtr body = f.q->body ? inverse_image(f.q->body, h) : nullptr;
      return with_quant(f, f.q->var, std::move(fam), std::move(body));
    }
    default:
      return phi;
  }
}

}  // namespace

FormulaPtr substitute_var(const FormulaPtr& chi, const std::string& q, const std::string& p) {
  if (q == p) return chi;
  return subst(chi, q, p);
}

FormulaPtr tilde_substitute(const FormulaPtr& chi, const RankedAlphabet& delta, const std::vector<FormulaPtr>& family,
                            const std::string& x, const RankedAlphabet& sigma) {
  if (family.size() != delta.size()) throw Error("family does not cover the alphabet");
  std::set<std::string> famFree;
  for (const auto& m : family)
    for (const auto& v : free_vars(*m)) famFree.insert(v);
  std::set<std::string> chiFree = free_vars(*chi);
  if (chiFree.count(x)) throw Error("variable capture: " + x + " is free in the substituted formula");
  for (const auto& v : famFree)
    if (v != x && chiFree.count(v)) throw Error("variable capture: " + v + " is free in both formulas");
  // no bound variable of chi may capture a free variable of the family
  std::set<std::string> avoid = famFree;
  avoid.insert(x);
  FormulaPtr clean = rename_bound(chi, avoid);
  return tilde(clean, TildeCtx{delta, family, x, sigma});
}

FormulaPtr inverse_literal_image(const FormulaPtr& phi, const std::vector<int>& h) { return inverse_image(phi, h); }

RankedTree apply_literal_morphism(const RankedTree& t, const std::vector<int>& h) { return relabel_letters(t, h); }

// ---------------------------------------------------------------- parsing

namespace {

const std::set<std::string> kKeywords{"true", "false", "exists", "forall", "mod", "Q", "P", "root", "max", "left", "right"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

// Fresh names for bound variables, shared by everything parsed from one file.
struct NameSupply {
  std::set<std::string> taken;
  void scan(std::string_view text) {
    for (std::size_t i = 0; i < text.size();) {
      if (ident_start(text[i])) {
        std::size_t j = i;
        while (j < text.size() && ident_char(text[j])) ++j;
        taken.insert(std::string(text.substr(i, j - i)));
        i = j;
      } else {
        ++i;
      }
    }
  }
  std::string fresh(const std::string& base) {
    std::string n = fresh_name(base, taken);
    taken.insert(n);
    return n;
  }
};

class Parser {
 public:
  Parser(std::string_view text, const AlphabetPtr& sigma, int k, const LanguageTable& langs, NameSupply& names)
      : s_(text), sigma_(sigma), k_(k), langs_(langs), names_(names) {}

  FormulaPtr parse_all() {
    FormulaPtr f = implication();
    ws();
    if (pos_ != s_.size()) fail("unexpected input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("formula column " + std::to_string(pos_ + 1) + ": " + msg + " in `" + std::string(s_) + "`");
  }

  void ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(std::string_view tok) {
    ws();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!eat(tok)) fail("expected `" + std::string(tok) + "`");
  }

  std::string peek_ident() {
    ws();
    std::size_t j = pos_;
    if (j >= s_.size() || !ident_start(s_[j])) return {};
    while (j < s_.size() && ident_char(s_[j])) ++j;
    return std::string(s_.substr(pos_, j - pos_));
  }

  std::string ident() {
    std::string id = peek_ident();
    if (id.empty()) fail("expected an identifier");
    pos_ += id.size();
    return id;
  }

  int integer() {
    ws();
    std::size_t j = pos_;
    while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
    if (j == pos_) fail("expected a number");
    int v = std::stoi(std::string(s_.substr(pos_, j - pos_)));
    pos_ = j;
    return v;
  }

  // Raw text up to one of the stop characters (symbol names like 1_0).
  std::string raw(std::string_view stops) {
    ws();
    std::size_t j = pos_;
    while (j < s_.size() && stops.find(s_[j]) == std::string_view::npos && !std::isspace(static_cast<unsigned char>(s_[j]))) ++j;
    std::string out(s_.substr(pos_, j - pos_));
    if (out.empty()) fail("expected a name");
    pos_ = j;
    return out;
  }

  std::string variable() {
    std::string id = ident();
    if (kKeywords.count(id) || id.rfind("succ_", 0) == 0) fail("`" + id + "` is not a variable name");
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == id) return it->second;
    return id;
  }

  FormulaPtr implication() {
    FormulaPtr a = disjunction();
    if (eat("->")) return f_or(f_not(a), implication());
    return a;
  }

  FormulaPtr disjunction() {
    FormulaPtr a = conjunction();
    for (;;) {
      ws();
      if (s_.substr(pos_, 1) == "|") {
        ++pos_;
        a = f_or(a, conjunction());
      } else {
        return a;
      }
    }
  }

  FormulaPtr conjunction() {
    FormulaPtr a = unary();
    while (eat("&")) a = f_and(a, unary());
    return a;
  }

  std::string bind(const std::string& name) {
    std::string fresh = names_.fresh(name);
    scope_.emplace_back(name, fresh);
    return fresh;
  }

  FormulaPtr unary() {
    if (eat("!")) return f_not(unary());
    if (eat("(")) {
      FormulaPtr f = implication();
      expect(")");
      return f;
    }
    std::string id = peek_ident();
    if (id == "exists" || id == "forall") {
      pos_ += id.size();
      std::string name = ident();
      expect(".");
      std::string x = bind(name);
      FormulaPtr body = implication();
      scope_.pop_back();
      if (id == "exists") return desugar_exists(x, body, sigma_, k_);
      return f_not(desugar_exists(x, f_not(body), sigma_, k_));
    }
    if (id == "mod") {
      pos_ += id.size();
      expect("[");
      int p = integer();
      expect(",");
      int r = integer();
      expect("]");
      std::string name = ident();
      expect(".");
      if (p < 1 || r < 0 || r >= p) fail("mod[p,r] needs 0 <= r < p");
      std::string x = bind(name);
      FormulaPtr body = implication();
      scope_.pop_back();
      return desugar_mod(p, r, x, body, sigma_, k_);
    }
    if (id == "Q") {
      pos_ += id.size();
      return quantifier();
    }
    return atomic();
  }

  FormulaPtr quantifier() {
    expect("[");
    std::string lname = raw("]");
    expect("]");
    auto it = langs_.find(lname);
    if (it == langs_.end()) fail("unknown language `" + lname + "`");
    LanguagePtr lang = it->second;
    if (lang->rank != k_) fail("language `" + lname + "` has rank " + std::to_string(lang->rank) + ", formula rank is " + std::to_string(k_));
    const auto& delta = *lang->delta;
    for (const auto& s : sigma_->symbols())
      if (!delta.has_arity(s.arity))
        fail("alphabet of `" + lname + "` has no letter of rank " + std::to_string(s.arity));
    std::string name = ident();
    std::string x = bind(name);
    expect("{");
    std::vector<FormulaPtr> fam(delta.size());
    for (;;) {
      if (eat("}")) break;
      std::string dname = raw(":;}");
      expect(":");
      FormulaPtr phi = implication();
      if (dname == "1") {
        if (!is_boolean_alphabet(delta)) fail("`1:` needs a Boolean alphabet");
        auto b = boolean_family(delta, phi);
        for (std::size_t d = 0; d < fam.size(); ++d) {
          if (fam[d]) fail("letter " + delta[static_cast<int>(d)].name + " given twice");
          fam[d] = b[d];
        }
      } else {
        auto d = delta.find(dname);
        if (!d) fail("unknown letter `" + dname + "` of `" + lname + "`");
        if (fam[static_cast<std::size_t>(*d)]) fail("letter " + dname + " given twice");
        fam[static_cast<std::size_t>(*d)] = phi;
      }
      if (!eat(";")) {
        expect("}");
        break;
      }
    }
    scope_.pop_back();
    for (auto& f : fam)
      if (!f) f = f_false();
    return f_quant(lang, x, std::move(fam));
  }

  std::string var_arg() {
    expect("(");
    std::string x = variable();
    expect(")");
    return x;
  }

  void check_i(int i) {
    if (i < 1 || i > sigma_->max_arity()) fail("successor index " + std::to_string(i) + " out of range");
  }
  void check_j(int j) {
    if (j < 1 || j > k_) fail("variable index " + std::to_string(j) + " out of range for rank " + std::to_string(k_));
  }

  FormulaPtr atomic() {
    std::string id = peek_ident();
    if (id.empty()) fail("expected a formula");
    if (id == "true" || id == "false") {
      pos_ += id.size();
      return id == "true" ? f_true() : f_false();
    }
    if (id == "P") {
      pos_ += 1;
      expect("[");
      std::string name = raw("]");
      expect("]");
      auto s = sigma_->find(name);
      if (!s) fail("unknown symbol `" + name + "`");
      return f_label(*s, var_arg());
    }
    if (id.rfind("succ_", 0) == 0 && id.size() > 5 &&
        std::all_of(id.begin() + 5, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      pos_ += id.size();
      int i = std::stoi(id.substr(5));
      check_i(i);
      expect("(");
      std::string x = variable();
      expect(",");
      std::string y = variable();
      expect(")");
      return f_succ(i, x, y);
    }
    if (id == "root") {
      pos_ += id.size();
      return f_root(var_arg());
    }
    if (id == "max") {
      pos_ += id.size();
      expect("[");
      int i = integer();
      expect(",");
      int j = integer();
      expect("]");
      check_i(i);
      check_j(j);
      return f_max(i, j, var_arg());
    }
    if (id == "left" || id == "right") {
      pos_ += id.size();
      expect("[");
      int j = integer();
      expect("]");
      std::string x = var_arg();
      int sugarJ = id == "left" ? 0 : k_ + 1;
      if (j == sugarJ) {
        FormulaPtr out = f_true();
        for (int jj = k_; jj >= 1; --jj) {
          FormulaPtr a = f_not(id == "left" ? f_left(jj, x) : f_right(jj, x));
          out = out->kind == Kind::True ? a : f_and(a, out);
        }
        return out;
      }
      check_j(j);
      return id == "left" ? f_left(j, x) : f_right(j, x);
    }
    std::string x = variable();
    expect("<");
    std::string y = variable();
    return f_less(x, y);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  AlphabetPtr sigma_;
  int k_;
  const LanguageTable& langs_;
  NameSupply& names_;
  std::vector<std::pair<std::string, std::string>> scope_;
};

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string join_path(const std::string& dir, const std::string& p) {
  if (p.empty() || p[0] == '/' || dir.empty()) return p;
  return dir + "/" + p;
}

}  // namespace

FormulaPtr parse_formula(std::string_view text, const AlphabetPtr& sigma, int k, const LanguageTable& langs) {
  NameSupply names;
  names.scan(text);
  return Parser(text, sigma, k, langs, names).parse_all();
}

FormulaFile parse_formula_file(std::string_view text, const std::string& baseDir) {
  FormulaFile out;
  NameSupply names;
  names.scan(text);
  bool haveRank = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineNo = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ParseError("line " + std::to_string(lineNo) + ": " + msg);
  };
  auto need_header = [&]() {
    if (!out.sigma) fail("`alphabet` must come first");
    if (!haveRank) fail("`rank` must come before languages and formulas");
  };
  while (std::getline(in, line)) {
    ++lineNo;
    std::string l = trim(line);
    if (l.empty() || l[0] == '#') continue;
    std::istringstream words(l);
    std::string head;
    words >> head;
    std::string rest = trim(l.substr(head.size()));
    try {
      if (head == "alphabet") {
        if (rest.rfind("inline", 0) == 0) {
          std::string spec = rest.substr(6);
          std::replace(spec.begin(), spec.end(), ' ', '\n');
          out.sigma = std::make_shared<const RankedAlphabet>(RankedAlphabet::parse(spec));
        } else {
          out.sigma = std::make_shared<const RankedAlphabet>(RankedAlphabet::load(join_path(baseDir, rest)));
        }
      } else if (head == "rank") {
        out.rank = std::stoi(rest);
        if (out.rank < 0) fail("rank must be >= 0");
        haveRank = true;
      } else if (head == "lang") {
        need_header();
        auto eq = rest.find('=');
        if (eq == std::string::npos) fail("expected `lang NAME = ...`");
        std::string name = trim(rest.substr(0, eq));
        std::istringstream def(trim(rest.substr(eq + 1)));
        std::string what;
        def >> what;
        LanguagePtr lang;
        if (what == "builtin") {
          std::string kind;
          def >> kind;
          int p = 0, r = 0;
          if (kind == "mod") {
            if (!(def >> p >> r)) fail("expected `builtin mod p r`");
            if (p < 1 || r < 0 || r >= p) fail("mod needs 0 <= r < p");
          }
          if (kind != "exists" && kind != "mod" && kind != "path" && kind != "forall_next")
            fail("unknown builtin `" + kind + "`");
          lang = builtin_language(out.sigma, out.rank, kind, p, r);
        } else {
          std::string path = join_path(baseDir, what);
          std::string text = read_file(path);
          std::optional<TreeAutomaton> a;
          try {
            a = TreeAutomaton::parse(text, boolean_alphabet(*out.sigma));
          } catch (const ParseError&) {
            a = TreeAutomaton::parse(text);
          }
          if (a->rank() != out.rank) fail("automaton " + what + " has rank " + std::to_string(a->rank()));
          lang = automaton_language(name, std::move(*a));
        }
        auto named = std::make_shared<Language>(*lang);
        named->name = name;
        out.languages[name] = named;
      } else if (head == "deflang") {
        need_header();
        auto colon = rest.find(':');
        if (colon == std::string::npos) fail("expected `deflang NAME over ALPHABET : sentence`");
        std::istringstream def(rest.substr(0, colon));
        std::string name, over, which;
        def >> name >> over >> which;
        if (over != "over") fail("expected `over`");
        AlphabetPtr delta;
        if (which == "boolean")
          delta = boolean_alphabet(*out.sigma);
        else if (which == "sigma")
          delta = out.sigma;
        else
          delta = std::make_shared<const RankedAlphabet>(RankedAlphabet::load(join_path(baseDir, which)));
        auto lang = std::make_shared<Language>();
        lang->name = name;
        lang->delta = delta;
        lang->rank = out.rank;
        lang->definition = Parser(rest.substr(colon + 1), delta, out.rank, out.languages, names).parse_all();
        if (!free_vars(*lang->definition).empty()) fail("definition of " + name + " must be a sentence");
        out.languages[name] = lang;
      } else if (head == "formula") {
        need_header();
        out.sources.push_back(rest);
        out.formulas.push_back(Parser(rest, out.sigma, out.rank, out.languages, names).parse_all());
      } else {
        fail("unknown directive `" + head + "`");
      }
    } catch (const ParseError& e) {
      std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      throw ParseError("line " + std::to_string(lineNo) + ": " + msg);
    } catch (const std::invalid_argument&) {
      fail("expected a number");
    }
  }
  if (!out.sigma) throw ParseError("formula file has no alphabet");
  return out;
}

FormulaFile load_formula_file(const std::string& path) {
  std::string dir = ".";
  auto slash = path.rfind('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_formula_file(read_file(path), dir);
}

}  // namespace lind
