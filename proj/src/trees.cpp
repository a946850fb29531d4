#include "lind/trees.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace lind {

namespace {

bool is_var_name(std::string_view name) {
  if (name.size() < 2 || name[0] != 'v') return false;
  return std::all_of(name.begin() + 1, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

RankedAlphabet::RankedAlphabet(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw Error("alphabet is empty");
  std::set<std::string> seen;
  for (const auto& s : symbols_) {
    if (s.name.empty()) throw Error("empty symbol name");
    if (s.arity < 0) throw Error("negative arity for symbol " + s.name);
    if (is_var_name(s.name)) throw Error("symbol name " + s.name + " clashes with variable syntax");
    if (!seen.insert(s.name).second) throw Error("duplicate symbol " + s.name);
    max_arity_ = std::max(max_arity_, s.arity);
  }
}

RankedAlphabet RankedAlphabet::parse(std::string_view text) {
  std::vector<Symbol> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::string word;
    while (words >> word) {
      auto slash = word.rfind('/');
      if (slash == std::string::npos || slash == 0 || slash + 1 == word.size())
        throw ParseError("alphabet line " + std::to_string(lineno) + ": expected name/arity, got '" + word + "'");
      Symbol s;
      s.name = word.substr(0, slash);
      try {
        s.arity = std::stoi(word.substr(slash + 1));
      } catch (const std::exception&) {
        throw ParseError("alphabet line " + std::to_string(lineno) + ": bad arity in '" + word + "'");
      }
      out.push_back(std::move(s));
    }
  }
  return RankedAlphabet(std::move(out));
}

RankedAlphabet RankedAlphabet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open alphabet file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::optional<int> RankedAlphabet::find(std::string_view name) const {
  for (std::size_t i = 0; i < symbols_.size(); ++i)
    if (symbols_[i].name == name) return static_cast<int>(i);
  return std::nullopt;
}

bool RankedAlphabet::has_arity(int n) const {
  return std::any_of(symbols_.begin(), symbols_.end(), [n](const Symbol& s) { return s.arity == n; });
}

std::vector<int> RankedAlphabet::symbols_of_arity(int n) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < symbols_.size(); ++i)
    if (symbols_[i].arity == n) out.push_back(static_cast<int>(i));
  return out;
}

std::string RankedAlphabet::to_string() const {
  std::string out;
  for (const auto& s : symbols_) out += s.name + "/" + std::to_string(s.arity) + "\n";
  return out;
}

bool operator==(const RankedAlphabet& a, const RankedAlphabet& b) {
  if (a.symbols_.size() != b.symbols_.size()) return false;
  for (std::size_t i = 0; i < a.symbols_.size(); ++i)
    if (a.symbols_[i].name != b.symbols_[i].name || a.symbols_[i].arity != b.symbols_[i].arity) return false;
  return true;
}

AlphabetPtr sigma_ex() {
  static const AlphabetPtr a = std::make_shared<RankedAlphabet>(std::vector<Symbol>{{"f", 2}, {"a", 0}, {"b", 0}});
  return a;
}

AlphabetPtr boolean_alphabet(const RankedAlphabet& sigma) {
  std::vector<Symbol> out;
  for (int n = 0; n <= sigma.max_arity(); ++n) {
    if (!sigma.has_arity(n)) continue;
    out.push_back({"0_" + std::to_string(n), n});
    out.push_back({"1_" + std::to_string(n), n});
  }
  return std::make_shared<RankedAlphabet>(std::move(out));
}

bool is_boolean_alphabet(const RankedAlphabet& delta) {
  for (const auto& s : delta.symbols()) {
    auto us = s.name.find('_');
    if (us != 1 || (s.name[0] != '0' && s.name[0] != '1')) return false;
    if (s.name.substr(2) != std::to_string(s.arity)) return false;
    std::string other = std::string(1, s.name[0] == '0' ? '1' : '0') + s.name.substr(1);
    if (!delta.find(other)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- RankedTree

RankedTree::RankedTree() : nodes_{Node{kVar, 0}}, rank_(1) {}

RankedTree RankedTree::leaf(int symbol) {
  return from_nodes({Node{symbol, 0}});
}

RankedTree RankedTree::make(int symbol, std::span<const RankedTree> children) {
  if (symbol < 0) throw Error("make: negative symbol id");
  std::vector<Node> nodes;
  nodes.push_back(Node{symbol, static_cast<int>(children.size())});
  for (const auto& c : children) nodes.insert(nodes.end(), c.nodes_.begin(), c.nodes_.end());
  return from_nodes(std::move(nodes));
}

RankedTree RankedTree::from_nodes(std::vector<Node> nodes) {
  // Validate that the preorder sequence describes exactly one tree.
  std::size_t need = 1;
  int vars = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (need == 0) throw Error("node sequence has trailing nodes");
    const Node& n = nodes[i];
    if (n.label == kVar && n.arity != 0) throw Error("variable node with children");
    if (n.label < kVar || n.arity < 0) throw Error("malformed node");
    if (n.label == kVar) ++vars;
    need = need - 1 + static_cast<std::size_t>(n.arity);
  }
  if (need != 0 || nodes.empty()) throw Error("node sequence is incomplete");
  RankedTree t;
  t.nodes_ = std::move(nodes);
  t.rank_ = vars;
  return t;
}

std::size_t RankedTree::subtree_end(std::size_t i) const {
  std::size_t need = 1;
  while (need > 0) {
    need = need - 1 + static_cast<std::size_t>(nodes_[i].arity);
    ++i;
  }
  return i;
}

std::vector<std::size_t> RankedTree::children(std::size_t i) const {
  std::vector<std::size_t> out;
  std::size_t c = i + 1;
  for (int j = 0; j < nodes_[i].arity; ++j) {
    out.push_back(c);
    c = subtree_end(c);
  }
  return out;
}

RankedTree RankedTree::subtree(std::size_t i) const {
  std::vector<Node> nodes(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                          nodes_.begin() + static_cast<std::ptrdiff_t>(subtree_end(i)));
  return from_nodes(std::move(nodes));
}

std::vector<std::size_t> RankedTree::nv_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].label != kVar) out.push_back(i);
  return out;
}

std::vector<int> RankedTree::path_of(std::size_t target) const {
  std::vector<int> path;
  std::size_t i = 0;
  while (i != target) {
    auto ch = children(i);
    bool moved = false;
    for (std::size_t j = 0; j < ch.size(); ++j) {
      std::size_t end = j + 1 < ch.size() ? ch[j + 1] : subtree_end(i);
      if (target >= ch[j] && target < end) {
        path.push_back(static_cast<int>(j));
        i = ch[j];
        moved = true;
        break;
      }
    }
    if (!moved) throw Error("path_of: index out of range");
  }
  return path;
}

std::size_t RankedTree::index_of(std::span<const int> path) const {
  std::size_t i = 0;
  for (int step : path) {
    if (step < 0 || step >= nodes_[i].arity) throw Error("invalid node path");
    i = children(i)[static_cast<std::size_t>(step)];
  }
  return i;
}

std::string RankedTree::to_string(const RankedAlphabet& alphabet) const {
  std::string out;
  int var = 0;
  std::vector<int> pending;  // children still to print per open node
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.label == kVar) {
      out += "v" + std::to_string(++var);
    } else {
      out += alphabet[n.label].name;
    }
    if (n.arity > 0) {
      out += "(";
      pending.push_back(n.arity);
      continue;
    }
    while (!pending.empty()) {
      if (--pending.back() > 0) {
        out += ",";
        break;
      }
      pending.pop_back();
      out += ")";
    }
  }
  return out;
}

std::size_t RankedTree::hash() const {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : nodes_) {
    h ^= static_cast<std::size_t>(n.label + 2) * 0x9e3779b97f4a7c15ULL + static_cast<std::size_t>(n.arity);
    h *= 0x100000001b3ULL;
  }
  return h;
}

int TreeTuple::total_rank() const {
  int r = 0;
  for (const auto& c : components) r += c.rank();
  return r;
}

TreeTuple oplus(std::vector<RankedTree> trees) { return TreeTuple{std::move(trees)}; }

TreeTuple unit_tuple(int n) { return TreeTuple{std::vector<RankedTree>(static_cast<std::size_t>(n))}; }

// ---------------------------------------------------------------- parsing

namespace {

class TermParser {
 public:
  TermParser(std::string_view text, const RankedAlphabet& alphabet) : text_(text), alphabet_(alphabet) {}

  RankedTree parse() {
    std::vector<RankedTree::Node> nodes;
    term(nodes);
    skip();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return RankedTree::from_nodes(std::move(nodes));
  }

  std::vector<int> var_indices;

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("tree, column " + std::to_string(pos_ + 1) + ": " + msg);
  }
  std::string name() {
    skip();
    std::size_t b = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',') break;
      ++pos_;
    }
    if (b == pos_) fail("expected a symbol");
    return std::string(text_.substr(b, pos_ - b));
  }
  void term(std::vector<RankedTree::Node>& nodes) {
    std::size_t start = pos_;
    std::string n = name();
    if (is_var_name(n)) {
      var_indices.push_back(std::stoi(n.substr(1)));
      nodes.push_back({RankedTree::kVar, 0});
      skip();
      if (pos_ < text_.size() && text_[pos_] == '(') fail("variable " + n + " cannot have children");
      return;
    }
    auto id = alphabet_.find(n);
    if (!id) {
      pos_ = start;
      fail("unknown symbol '" + n + "'");
    }
    std::size_t at = nodes.size();
    nodes.push_back({*id, 0});
    skip();
    int count = 0;
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      for (;;) {
        term(nodes);
        ++count;
        skip();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (pos_ < text_.size() && text_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    if (count != alphabet_[*id].arity)
      fail("symbol " + n + " has arity " + std::to_string(alphabet_[*id].arity) + " but got " +
           std::to_string(count) + " children");
    nodes[at].arity = count;
  }

  std::string_view text_;
  const RankedAlphabet& alphabet_;
  std::size_t pos_ = 0;
};

}  // namespace

RankedTree parse_tree(std::string_view text, const RankedAlphabet& alphabet) {
  TermParser p(text, alphabet);
  RankedTree t = p.parse();
  for (std::size_t i = 0; i < p.var_indices.size(); ++i)
    if (p.var_indices[i] != static_cast<int>(i) + 1)
      throw ParseError("frontier variables must read v1..v" + std::to_string(p.var_indices.size()) +
                       " left to right");
  return t;
}

RankedTree parse_tree(std::string_view text, const RankedAlphabet& alphabet, int rank) {
  RankedTree t = parse_tree(text, alphabet);
  if (t.rank() != rank)
    throw ParseError("tree has rank " + std::to_string(t.rank()) + ", expected " + std::to_string(rank));
  return t;
}

// ---------------------------------------------------------------- composition

RankedTree compose(const RankedTree& f, std::span<const RankedTree> g) {
  if (static_cast<int>(g.size()) != f.rank())
    throw Error("compose: tuple width " + std::to_string(g.size()) + " does not match rank " +
                std::to_string(f.rank()));
  std::vector<RankedTree::Node> nodes;
  std::size_t next = 0;
  for (const auto& n : f.nodes()) {
    if (n.label == RankedTree::kVar) {
      const auto& sub = g[next++].nodes();
      nodes.insert(nodes.end(), sub.begin(), sub.end());
    } else {
      nodes.push_back(n);
    }
  }
  return RankedTree::from_nodes(std::move(nodes));
}

RankedTree compose(const RankedTree& f, const TreeTuple& g) { return compose(f, std::span<const RankedTree>(g.components)); }

Factorization factor_at_index(const RankedTree& t, std::size_t x) {
  if (x >= t.size() || t.is_var(x)) throw Error("factor_at: node is not a non-variable node");
  std::size_t end = t.subtree_end(x);
  Factorization out;
  std::vector<RankedTree::Node> r;
  for (std::size_t i = 0; i < x; ++i) {
    r.push_back(t.node(i));
    if (t.is_var(i)) ++out.k1;
  }
  r.push_back({RankedTree::kVar, 0});
  for (std::size_t i = end; i < t.size(); ++i) {
    r.push_back(t.node(i));
    if (t.is_var(i)) ++out.k2;
  }
  out.r = RankedTree::from_nodes(std::move(r));
  out.s = t.subtree(x);
  return out;
}

Factorization factor_at(const RankedTree& t, const NodeId& x) { return factor_at_index(t, t.index_of(x)); }

// ---------------------------------------------------------------- enumeration

std::vector<RankedTree> enumerate_trees(const RankedAlphabet& alphabet, int rank, int maxNV) {
  // memo[(nv, rank)] = node sequences of trees with exactly nv NV nodes
  std::map<std::pair<int, int>, std::vector<std::vector<RankedTree::Node>>> memo;
  std::function<const std::vector<std::vector<RankedTree::Node>>&(int, int)> gen;
  gen = [&](int nv, int r) -> const std::vector<std::vector<RankedTree::Node>>& {
    auto key = std::make_pair(nv, r);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::vector<std::vector<RankedTree::Node>> out;
    if (nv == 0) {
      if (r == 1) out.push_back({RankedTree::Node{RankedTree::kVar, 0}});
    } else if (r >= 0) {
      for (std::size_t s = 0; s < alphabet.size(); ++s) {
        int m = alphabet[static_cast<int>(s)].arity;
        // fill children left to right, distributing nv-1 NV nodes and r variables
        std::vector<RankedTree::Node> prefix{RankedTree::Node{static_cast<int>(s), m}};
        std::function<void(int, int, int, std::vector<RankedTree::Node>&)> fill;
        fill = [&](int child, int nvLeft, int rLeft, std::vector<RankedTree::Node>& acc) {
          if (child == m) {
            if (nvLeft == 0 && rLeft == 0) out.push_back(acc);
            return;
          }
          for (int cn = 0; cn <= nvLeft; ++cn) {
            for (int cr = 0; cr <= rLeft; ++cr) {
              const auto& subs = gen(cn, cr);
              for (const auto& sub : subs) {
                std::size_t mark = acc.size();
                acc.insert(acc.end(), sub.begin(), sub.end());
                fill(child + 1, nvLeft - cn, rLeft - cr, acc);
                acc.resize(mark);
              }
            }
          }
        };
        fill(0, nv - 1, r, prefix);
      }
    }
    return memo.emplace(key, std::move(out)).first->second;
  };

  std::vector<RankedTree> result;
  for (int nv = 0; nv <= maxNV; ++nv) {
    std::vector<std::pair<std::string, RankedTree>> layer;
    for (const auto& nodes : gen(nv, rank)) {
      RankedTree t = RankedTree::from_nodes(nodes);
      layer.emplace_back(t.to_string(alphabet), std::move(t));
    }
    std::sort(layer.begin(), layer.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& p : layer) result.push_back(std::move(p.second));
  }
  return result;
}

RankedTree relabel_letters(const RankedTree& t, std::span<const int> map) {
  std::vector<RankedTree::Node> nodes = t.nodes();
  for (auto& n : nodes)
    if (n.label != RankedTree::kVar) n.label = map[static_cast<std::size_t>(n.label)];
  return RankedTree::from_nodes(std::move(nodes));
}

}  // namespace lind
