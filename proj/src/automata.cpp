#include "lind/automata.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

namespace lind {

namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Decode a mixed-radix table offset into child states.
void decode(std::size_t idx, int arity, int states, std::vector<int>& out) {
  out.assign(static_cast<std::size_t>(arity), 0);
  for (int i = arity - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(idx % static_cast<std::size_t>(states));
    idx /= static_cast<std::size_t>(states);
  }
}

struct VecHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::size_t h = 0x84222325;
    for (auto x : v) h = (h ^ static_cast<std::size_t>(x)) * 0x100000001b3ULL;
    return h;
  }
};

void check_compatible(const TreeAutomaton& a, const TreeAutomaton& b) {
  if (!(*a.alphabet() == *b.alphabet())) throw Error("automata over different alphabets");
  if (a.rank() != b.rank()) throw Error("automata of different ranks");
}

void require_boolean(const RankedAlphabet& delta) {
  if (!is_boolean_alphabet(delta)) throw Error("alphabet is not a Boolean alphabet");
}

}  // namespace

TreeAutomaton::TreeAutomaton(AlphabetPtr alphabet, int rank, int states)
    : alphabet_(std::move(alphabet)), rank_(rank), states_(states) {
  if (!alphabet_) throw Error("automaton needs an alphabet");
  if (rank < 0) throw Error("negative rank");
  if (states <= 0) throw Error("automaton needs at least one state");
  var_state_.assign(static_cast<std::size_t>(rank), 0);
  final_.assign(static_cast<std::size_t>(states), false);
  for (const auto& s : alphabet_->symbols()) trans_.emplace_back(ipow(static_cast<std::size_t>(states), s.arity), 0);
}

void TreeAutomaton::set_var_state(int j, int q) {
  if (j < 1 || j > rank_) throw Error("variable index out of range");
  if (q < 0 || q >= states_) throw Error("state out of range");
  var_state_[static_cast<std::size_t>(j - 1)] = q;
}

std::vector<int> TreeAutomaton::finals() const {
  std::vector<int> out;
  for (int q = 0; q < states_; ++q)
    if (final_[static_cast<std::size_t>(q)]) out.push_back(q);
  return out;
}

std::size_t TreeAutomaton::offset(int symbol, std::span<const int> children) const {
  if (static_cast<int>(children.size()) != (*alphabet_)[symbol].arity) throw Error("transition arity mismatch");
  std::size_t idx = 0;
  for (int q : children) {
    if (q < 0 || q >= states_) throw Error("state out of range");
    idx = idx * static_cast<std::size_t>(states_) + static_cast<std::size_t>(q);
  }
  return idx;
}

int TreeAutomaton::step(int symbol, std::span<const int> children) const {
  return trans_[static_cast<std::size_t>(symbol)][offset(symbol, children)];
}

void TreeAutomaton::set_step(int symbol, std::span<const int> children, int q) {
  if (q < 0 || q >= states_) throw Error("state out of range");
  trans_[static_cast<std::size_t>(symbol)][offset(symbol, children)] = q;
}

int TreeAutomaton::run(const RankedTree& t) const {
  if (t.rank() != rank_)
    throw Error("run: tree has rank " + std::to_string(t.rank()) + ", automaton has rank " + std::to_string(rank_));
  // Evaluate in reverse preorder with an explicit value stack.
  std::vector<int> stack;
  int var = t.rank();
  const auto& nodes = t.nodes();
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto& n = nodes[i];
    if (n.label == RankedTree::kVar) {
      stack.push_back(var_state(var--));
      continue;
    }
    if (n.label >= static_cast<int>(alphabet_->size())) throw Error("run: symbol outside alphabet");
    std::size_t idx = 0;
    for (int c = 0; c < n.arity; ++c) {
      idx = idx * static_cast<std::size_t>(states_) + static_cast<std::size_t>(stack.back());
      stack.pop_back();
    }
    stack.push_back(trans_[static_cast<std::size_t>(n.label)][idx]);
  }
  return stack.back();
}

bool TreeAutomaton::accepts(const RankedTree& t) const { return is_final(run(t)); }

std::string TreeAutomaton::to_text() const {
  std::ostringstream out;
  out << "rank " << rank_ << "\n";
  out << "states " << states_ << "\n";
  out << "finals";
  for (int q : finals()) out << " " << q;
  out << "\n";
  for (int j = 1; j <= rank_; ++j) out << "var " << j << " " << var_state(j) << "\n";
  std::vector<int> args;
  for (std::size_t s = 0; s < alphabet_->size(); ++s) {
    int m = (*alphabet_)[static_cast<int>(s)].arity;
    const auto& tab = trans_[s];
    for (std::size_t idx = 0; idx < tab.size(); ++idx) {
      decode(idx, m, states_, args);
      out << "trans " << (*alphabet_)[static_cast<int>(s)].name;
      for (int q : args) out << " " << q;
      out << " -> " << tab[idx] << "\n";
    }
  }
  return out.str();
}

namespace {

struct RawAutomaton {
  int rank = -1, states = -1;
  std::vector<int> finals;
  std::vector<std::pair<int, int>> vars;
  struct Trans {
    std::string symbol;
    std::vector<int> args;
    int target;
    int line;
  };
  std::vector<Trans> trans;
};

RawAutomaton parse_raw(std::string_view text) {
  RawAutomaton raw;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) { throw ParseError("automaton line " + std::to_string(lineno) + ": " + msg); };
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      int v = std::stoi(s, &used);
      if (used != s.size()) fail("expected an integer, got '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("expected an integer, got '" + s + "'");
    }
    return 0;
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    if (w[0] == "rank" && w.size() == 2) {
      raw.rank = to_int(w[1]);
    } else if (w[0] == "states" && w.size() == 2) {
      raw.states = to_int(w[1]);
    } else if (w[0] == "finals") {
      for (std::size_t i = 1; i < w.size(); ++i) raw.finals.push_back(to_int(w[i]));
    } else if (w[0] == "var" && w.size() == 3) {
      raw.vars.emplace_back(to_int(w[1]), to_int(w[2]));
    } else if (w[0] == "trans" && w.size() >= 4 && w[w.size() - 2] == "->") {
      RawAutomaton::Trans t;
      t.symbol = w[1];
      for (std::size_t i = 2; i + 2 < w.size(); ++i) t.args.push_back(to_int(w[i]));
      t.target = to_int(w.back());
      t.line = lineno;
      raw.trans.push_back(std::move(t));
    } else {
      fail("unrecognized line");
    }
  }
  if (raw.rank < 0) throw ParseError("automaton: missing 'rank' line");
  if (raw.states <= 0) throw ParseError("automaton: missing or invalid 'states' line");
  return raw;
}

TreeAutomaton from_raw(const RawAutomaton& raw, AlphabetPtr alphabet) {
  TreeAutomaton a(alphabet, raw.rank, raw.states);
  for (int q : raw.finals) {
    if (q < 0 || q >= raw.states) throw ParseError("automaton: final state out of range");
    a.set_final(q);
  }
  std::vector<bool> seenVar(static_cast<std::size_t>(raw.rank), false);
  for (auto [j, q] : raw.vars) {
    if (j < 1 || j > raw.rank) throw ParseError("automaton: variable index out of range");
    if (q < 0 || q >= raw.states) throw ParseError("automaton: variable state out of range");
    seenVar[static_cast<std::size_t>(j - 1)] = true;
    a.set_var_state(j, q);
  }
  for (bool b : seenVar)
    if (!b) throw ParseError("automaton: missing var line");
  std::vector<std::vector<bool>> defined;
  for (const auto& s : alphabet->symbols())
    defined.emplace_back(ipow(static_cast<std::size_t>(raw.states), s.arity), false);
  for (const auto& t : raw.trans) {
    auto id = alphabet->find(t.symbol);
    std::string where = "automaton line " + std::to_string(t.line) + ": ";
    if (!id) throw ParseError(where + "unknown symbol " + t.symbol);
    if (static_cast<int>(t.args.size()) != (*alphabet)[*id].arity) throw ParseError(where + "arity mismatch");
    for (int q : t.args)
      if (q < 0 || q >= raw.states) throw ParseError(where + "state out of range");
    if (t.target < 0 || t.target >= raw.states) throw ParseError(where + "state out of range");
    std::size_t idx = 0;
    for (int q : t.args) idx = idx * static_cast<std::size_t>(raw.states) + static_cast<std::size_t>(q);
    if (defined[static_cast<std::size_t>(*id)][idx]) throw ParseError(where + "duplicate transition");
    defined[static_cast<std::size_t>(*id)][idx] = true;
    a.set_step(*id, t.args, t.target);
  }
  for (std::size_t s = 0; s < defined.size(); ++s)
    for (bool b : defined[s])
      if (!b) throw ParseError("automaton: transitions for " + (*alphabet)[static_cast<int>(s)].name + " are not total");
  return a;
}

}  // namespace

TreeAutomaton TreeAutomaton::parse(std::string_view text, AlphabetPtr alphabet) {
  return from_raw(parse_raw(text), std::move(alphabet));
}

TreeAutomaton TreeAutomaton::parse(std::string_view text) {
  RawAutomaton raw = parse_raw(text);
  std::vector<Symbol> syms;
  for (const auto& t : raw.trans) {
    auto it = std::find_if(syms.begin(), syms.end(), [&](const Symbol& s) { return s.name == t.symbol; });
    if (it == syms.end()) {
      syms.push_back({t.symbol, static_cast<int>(t.args.size())});
    } else if (it->arity != static_cast<int>(t.args.size())) {
      throw ParseError("automaton line " + std::to_string(t.line) + ": inconsistent arity for " + t.symbol);
    }
  }
  return from_raw(raw, std::make_shared<RankedAlphabet>(std::move(syms)));
}

TreeAutomaton TreeAutomaton::load(const std::string& path, AlphabetPtr alphabet) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open automaton file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return alphabet ? parse(buf.str(), std::move(alphabet)) : parse(buf.str());
}

// ---------------------------------------------------------------- builder

BuiltAutomaton build_automaton(AlphabetPtr alphabet, int rank, const BuilderSpec& spec, std::size_t budget) {
  using Key = BuilderSpec::Key;
  std::vector<Key> keys;
  std::unordered_map<Key, int, VecHash> index;
  auto intern = [&](Key k) {
    auto it = index.find(k);
    if (it != index.end()) return it->second;
    if (keys.size() >= budget) throw BudgetExceeded("automaton construction exceeded " + std::to_string(budget) + " states");
    int id = static_cast<int>(keys.size());
    index.emplace(k, id);
    keys.push_back(std::move(k));
    return id;
  };
  std::vector<int> varStates;
  for (int j = 1; j <= rank; ++j) varStates.push_back(intern(spec.var_key(j)));

  // transitions recorded sparsely until the state set is known
  std::map<std::pair<int, std::vector<int>>, int> trans;
  std::size_t processed = 0;  // states [0, processed) have had all tuples explored
  std::vector<int> args;
  std::vector<const Key*> argKeys;
  for (;;) {
    std::size_t current = keys.size();
    if (current == processed && processed > 0) break;
    for (std::size_t s = 0; s < alphabet->size(); ++s) {
      int m = (*alphabet)[static_cast<int>(s)].arity;
      if (m == 0) {
        if (processed == 0) {
          auto key = std::make_pair(static_cast<int>(s), std::vector<int>{});
          if (!trans.count(key)) trans[key] = intern(spec.step(static_cast<int>(s), {}));
        }
        continue;
      }
      // tuples over [0,current) with at least one entry >= processed
      std::size_t total = ipow(current, m);
      for (std::size_t idx = 0; idx < total; ++idx) {
        decode(idx, m, static_cast<int>(current), args);
        bool fresh = std::any_of(args.begin(), args.end(), [&](int q) { return static_cast<std::size_t>(q) >= processed; });
        if (!fresh) continue;
        argKeys.clear();
        for (int q : args) argKeys.push_back(&keys[static_cast<std::size_t>(q)]);
        Key next = spec.step(static_cast<int>(s), argKeys);
        int target = intern(std::move(next));
        // keys may have reallocated; argKeys is rebuilt each iteration
        trans[{static_cast<int>(s), args}] = target;
      }
    }
    processed = current;
    if (keys.size() == current) break;
  }

  TreeAutomaton a(alphabet, rank, static_cast<int>(keys.size()));
  for (int j = 1; j <= rank; ++j) a.set_var_state(j, varStates[static_cast<std::size_t>(j - 1)]);
  for (const auto& [k, v] : trans) a.set_step(k.first, k.second, v);
  for (std::size_t q = 0; q < keys.size(); ++q) a.set_final(static_cast<int>(q), spec.is_final(keys[q]));
  return {std::move(a), std::move(keys)};
}

// ---------------------------------------------------------------- boolean ops

TreeAutomaton complement(const TreeAutomaton& a) {
  TreeAutomaton out = a;
  for (int q = 0; q < a.states(); ++q) out.set_final(q, !a.is_final(q));
  return out;
}

namespace {

TreeAutomaton product(const TreeAutomaton& a, const TreeAutomaton& b, bool conj) {
  check_compatible(a, b);
  BuilderSpec spec;
  spec.var_key = [&](int j) { return BuilderSpec::Key{a.var_state(j), b.var_state(j)}; };
  spec.step = [&](int s, std::span<const BuilderSpec::Key* const> ch) {
    std::vector<int> x, y;
    for (const auto* k : ch) {
      x.push_back(static_cast<int>((*k)[0]));
      y.push_back(static_cast<int>((*k)[1]));
    }
    return BuilderSpec::Key{a.step(s, x), b.step(s, y)};
  };
  spec.is_final = [&](const BuilderSpec::Key& k) {
    bool fa = a.is_final(static_cast<int>(k[0])), fb = b.is_final(static_cast<int>(k[1]));
    return conj ? (fa && fb) : (fa || fb);
  };
  return build_automaton(a.alphabet(), a.rank(), spec).automaton;
}

}  // namespace

TreeAutomaton intersect(const TreeAutomaton& a, const TreeAutomaton& b) { return product(a, b, true); }
TreeAutomaton unite(const TreeAutomaton& a, const TreeAutomaton& b) { return product(a, b, false); }

// ---------------------------------------------------------------- minimization

ColoredAutomaton minimize_colored(const TreeAutomaton& a, const std::vector<int>& color) {
  const auto& alpha = *a.alphabet();
  // reachable states
  std::vector<bool> reach(static_cast<std::size_t>(a.states()), false);
  for (int j = 1; j <= a.rank(); ++j) reach[static_cast<std::size_t>(a.var_state(j))] = true;
  std::vector<int> args;
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<int> live;
    for (int q = 0; q < a.states(); ++q)
      if (reach[static_cast<std::size_t>(q)]) live.push_back(q);
    for (std::size_t s = 0; s < alpha.size(); ++s) {
      int m = alpha[static_cast<int>(s)].arity;
      std::size_t total = ipow(live.size(), m);
      for (std::size_t idx = 0; idx < total; ++idx) {
        decode(idx, m, static_cast<int>(live.size()), args);
        for (auto& q : args) q = live[static_cast<std::size_t>(q)];
        int t = a.step(static_cast<int>(s), args);
        if (!reach[static_cast<std::size_t>(t)]) {
          reach[static_cast<std::size_t>(t)] = true;
          changed = true;
        }
      }
    }
  }
  std::vector<int> live;
  for (int q = 0; q < a.states(); ++q)
    if (reach[static_cast<std::size_t>(q)]) live.push_back(q);

  // Moore refinement: classes start from colors
  std::vector<int> cls(static_cast<std::size_t>(a.states()), -1);
  {
    std::map<int, int> ids;
    for (int q : live) {
      auto it = ids.emplace(color[static_cast<std::size_t>(q)], static_cast<int>(ids.size())).first;
      cls[static_cast<std::size_t>(q)] = it->second;
    }
  }
  std::size_t classCount = 0;
  for (;;) {
    std::map<std::vector<int>, int> sigIds;
    std::vector<int> next(cls.size(), -1);
    for (int q : live) {
      std::vector<int> sig{cls[static_cast<std::size_t>(q)]};
      for (std::size_t s = 0; s < alpha.size(); ++s) {
        int m = alpha[static_cast<int>(s)].arity;
        if (m == 0) continue;
        std::size_t others = ipow(live.size(), m - 1);
        for (int pos = 0; pos < m; ++pos) {
          for (std::size_t idx = 0; idx < others; ++idx) {
            decode(idx, m - 1, static_cast<int>(live.size()), args);
            for (auto& x : args) x = live[static_cast<std::size_t>(x)];
            args.insert(args.begin() + pos, q);
            sig.push_back(cls[static_cast<std::size_t>(a.step(static_cast<int>(s), args))]);
          }
        }
      }
      auto it = sigIds.emplace(std::move(sig), static_cast<int>(sigIds.size())).first;
      next[static_cast<std::size_t>(q)] = it->second;
    }
    bool stable = sigIds.size() == classCount;
    classCount = sigIds.size();
    cls = std::move(next);
    if (stable) break;
  }

  // canonical numbering: classes in order of their least live state
  std::vector<int> renum(classCount, -1);
  int n = 0;
  for (int q : live) {
    int& r = renum[static_cast<std::size_t>(cls[static_cast<std::size_t>(q)])];
    if (r < 0) r = n++;
  }
  auto newState = [&](int q) { return renum[static_cast<std::size_t>(cls[static_cast<std::size_t>(q)])]; };
  std::vector<int> rep(static_cast<std::size_t>(n), -1);
  for (int q : live)
    if (rep[static_cast<std::size_t>(newState(q))] < 0) rep[static_cast<std::size_t>(newState(q))] = q;

  TreeAutomaton out(a.alphabet(), a.rank(), n);
  std::vector<int> outColor(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    out.set_final(c, a.is_final(rep[static_cast<std::size_t>(c)]));
    outColor[static_cast<std::size_t>(c)] = color[static_cast<std::size_t>(rep[static_cast<std::size_t>(c)])];
  }
  for (int j = 1; j <= a.rank(); ++j) out.set_var_state(j, newState(a.var_state(j)));
  for (std::size_t s = 0; s < alpha.size(); ++s) {
    int m = alpha[static_cast<int>(s)].arity;
    std::size_t total = ipow(static_cast<std::size_t>(n), m);
    for (std::size_t idx = 0; idx < total; ++idx) {
      decode(idx, m, n, args);
      std::vector<int> orig;
      for (int c : args) orig.push_back(rep[static_cast<std::size_t>(c)]);
      out.set_step(static_cast<int>(s), args, newState(a.step(static_cast<int>(s), orig)));
    }
  }
  return {std::move(out), std::move(outColor)};
}

TreeAutomaton minimize(const TreeAutomaton& a) {
  std::vector<int> color;
  for (int q = 0; q < a.states(); ++q) color.push_back(a.is_final(q) ? 1 : 0);
  return minimize_colored(a, color).automaton;
}

// ---------------------------------------------------------------- quotients

namespace {

// Run with explicit states for each variable leaf (indexed from 1).
int run_with(const TreeAutomaton& a, const RankedTree& t, const std::vector<int>& varStates) {
  std::vector<int> stack;
  int var = t.rank();
  const auto& nodes = t.nodes();
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto& n = nodes[i];
    if (n.label == RankedTree::kVar) {
      stack.push_back(varStates[static_cast<std::size_t>(var-- - 1)]);
      continue;
    }
    std::vector<int> ch;
    for (int c = 0; c < n.arity; ++c) {
      ch.push_back(stack.back());
      stack.pop_back();
    }
    stack.push_back(a.step(n.label, ch));
  }
  return stack.back();
}

}  // namespace

TreeAutomaton left_quotient(const TreeAutomaton& a, const RankedTree& u, int k1, int k2) {
  int k = a.rank();
  if (k1 < 0 || k2 < 0 || k1 + k2 > k) throw Error("left_quotient: need k1+k2 <= k");
  if (u.rank() != k1 + 1 + k2) throw Error("left_quotient: u must have rank k1+1+k2");
  int l = k - k1 - k2;
  TreeAutomaton out(a.alphabet(), l, a.states());
  for (std::size_t s = 0; s < a.alphabet()->size(); ++s) {
    int m = (*a.alphabet())[static_cast<int>(s)].arity;
    std::vector<int> args;
    std::size_t total = ipow(static_cast<std::size_t>(a.states()), m);
    for (std::size_t idx = 0; idx < total; ++idx) {
      decode(idx, m, a.states(), args);
      out.set_step(static_cast<int>(s), args, a.step(static_cast<int>(s), args));
    }
  }
  for (int j = 1; j <= l; ++j) out.set_var_state(j, a.var_state(k1 + j));
  std::vector<int> vs(static_cast<std::size_t>(k1 + 1 + k2));
  for (int i = 1; i <= k1; ++i) vs[static_cast<std::size_t>(i - 1)] = a.var_state(i);
  for (int i = 1; i <= k2; ++i) vs[static_cast<std::size_t>(k1 + i)] = a.var_state(k1 + l + i);
  for (int q = 0; q < a.states(); ++q) {
    vs[static_cast<std::size_t>(k1)] = q;
    out.set_final(q, a.is_final(run_with(a, u, vs)));
  }
  return out;
}

TreeAutomaton right_quotient(const TreeAutomaton& a, const TreeTuple& v) {
  if (v.total_rank() != a.rank()) throw Error("right_quotient: tuple total rank must equal the language rank");
  int n = static_cast<int>(v.width());
  TreeAutomaton out(a.alphabet(), n, a.states());
  for (std::size_t s = 0; s < a.alphabet()->size(); ++s) {
    int m = (*a.alphabet())[static_cast<int>(s)].arity;
    std::vector<int> args;
    std::size_t total = ipow(static_cast<std::size_t>(a.states()), m);
    for (std::size_t idx = 0; idx < total; ++idx) {
      decode(idx, m, a.states(), args);
      out.set_step(static_cast<int>(s), args, a.step(static_cast<int>(s), args));
    }
  }
  for (int q = 0; q < a.states(); ++q) out.set_final(q, a.is_final(q));
  int offset = 0;
  for (int i = 0; i < n; ++i) {
    const auto& comp = v.components[static_cast<std::size_t>(i)];
    std::vector<int> vs;
    for (int j = 1; j <= comp.rank(); ++j) vs.push_back(a.var_state(offset + j));
    out.set_var_state(i + 1, run_with(a, comp, vs));
    offset += comp.rank();
  }
  return out;
}

// ---------------------------------------------------------------- builtins

namespace {

bool is_one(const RankedAlphabet& d, int s) { return d[s].name[0] == '1'; }

}  // namespace

TreeAutomaton builtin_K_exists(AlphabetPtr delta, int k) {
  require_boolean(*delta);
  TreeAutomaton a(delta, k, 2);
  for (int j = 1; j <= k; ++j) a.set_var_state(j, 0);
  a.set_final(1);
  for (std::size_t s = 0; s < delta->size(); ++s) {
    int m = (*delta)[static_cast<int>(s)].arity;
    std::vector<int> args;
    for (std::size_t idx = 0; idx < ipow(2, m); ++idx) {
      decode(idx, m, 2, args);
      bool any = std::any_of(args.begin(), args.end(), [](int q) { return q == 1; });
      a.set_step(static_cast<int>(s), args, (is_one(*delta, static_cast<int>(s)) || any) ? 1 : 0);
    }
  }
  return a;
}

TreeAutomaton builtin_K_mod(AlphabetPtr delta, int k, int p, int r) {
  require_boolean(*delta);
  if (p < 2 || r < 0 || r >= p) throw Error("K_mod needs p >= 2 and 0 <= r < p");
  TreeAutomaton a(delta, k, p);
  for (int j = 1; j <= k; ++j) a.set_var_state(j, 0);
  a.set_final(r);
  for (std::size_t s = 0; s < delta->size(); ++s) {
    int m = (*delta)[static_cast<int>(s)].arity;
    std::vector<int> args;
    for (std::size_t idx = 0; idx < ipow(static_cast<std::size_t>(p), m); ++idx) {
      decode(idx, m, p, args);
      int sum = is_one(*delta, static_cast<int>(s)) ? 1 : 0;
      for (int q : args) sum += q;
      a.set_step(static_cast<int>(s), args, sum % p);
    }
  }
  return a;
}

TreeAutomaton builtin_K_path(AlphabetPtr delta, int k) {
  require_boolean(*delta);
  // state 1: some path from this node down is all-1 (variable leaves end a path)
  TreeAutomaton a(delta, k, 2);
  for (int j = 1; j <= k; ++j) a.set_var_state(j, 1);
  a.set_final(1);
  for (std::size_t s = 0; s < delta->size(); ++s) {
    int m = (*delta)[static_cast<int>(s)].arity;
    std::vector<int> args;
    for (std::size_t idx = 0; idx < ipow(2, m); ++idx) {
      decode(idx, m, 2, args);
      bool below = m == 0 || std::any_of(args.begin(), args.end(), [](int q) { return q == 1; });
      a.set_step(static_cast<int>(s), args, (is_one(*delta, static_cast<int>(s)) && below) ? 1 : 0);
    }
  }
  return a;
}

TreeAutomaton builtin_K_forall_next(AlphabetPtr delta, int k) {
  require_boolean(*delta);
  // state = 2*selfOne + allChildrenOne; variable leaves count as 1-labeled
  TreeAutomaton a(delta, k, 4);
  for (int j = 1; j <= k; ++j) a.set_var_state(j, 3);
  a.set_final(1);
  a.set_final(3);
  for (std::size_t s = 0; s < delta->size(); ++s) {
    int m = (*delta)[static_cast<int>(s)].arity;
    std::vector<int> args;
    for (std::size_t idx = 0; idx < ipow(4, m); ++idx) {
      decode(idx, m, 4, args);
      bool all = std::all_of(args.begin(), args.end(), [](int q) { return q >= 2; });
      int self = is_one(*delta, static_cast<int>(s)) ? 1 : 0;
      a.set_step(static_cast<int>(s), args, 2 * self + (all ? 1 : 0));
    }
  }
  return a;
}

TreeAutomaton random_automaton(AlphabetPtr alphabet, int rank, int states, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, states - 1);
  TreeAutomaton a(alphabet, rank, states);
  for (int j = 1; j <= rank; ++j) a.set_var_state(j, pick(rng));
  for (std::size_t s = 0; s < alphabet->size(); ++s) {
    int m = (*alphabet)[static_cast<int>(s)].arity;
    std::vector<int> args;
    for (std::size_t idx = 0; idx < ipow(static_cast<std::size_t>(states), m); ++idx) {
      decode(idx, m, states, args);
      a.set_step(static_cast<int>(s), args, pick(rng));
    }
  }
  for (int q = 0; q < states; ++q) a.set_final(q, rng() % 2 == 0);
  return a;
}

}  // namespace lind
