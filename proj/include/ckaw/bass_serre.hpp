#ifndef CKAW_BASS_SERRE_HPP
#define CKAW_BASS_SERRE_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "ckaw/admissible.hpp"
#include "ckaw/freegroup.hpp"

namespace ckaw {

// One edge of a reduced path from the base vertex: multiply by `coset` (a shortlex-least
// representative of F/<b> at the departing vertex), then cross `edge` in direction `dir`
// (+1 from -> to, -1 to -> from).
struct Step {
  Word coset;
  int edge = 0;
  int dir = 1;

  friend bool operator==(const Step&, const Step&) = default;
};

inline bool step_less(const Step& a, const Step& b) {
  if (a.coset != b.coset) return shortlex_less(a.coset, b.coset);
  return std::tie(a.edge, a.dir) < std::tie(b.edge, b.dir);
}

// Element of G_v = F_k x Z.
struct VertexElement {
  Word word;
  long fiber = 0;

  bool trivial() const { return word.empty() && fiber == 0; }
  friend bool operator==(const VertexElement&, const VertexElement&) = default;
};

// A vertex of the Bass-Serre tree: the coset p G_v for the reduced path p.
struct TreeVertex {
  std::vector<Step> steps;
  int vertex = 0;

  std::size_t depth() const { return steps.size(); }
  // 0 for the class containing the base vertex, 1 for the other.
  int parity() const { return static_cast<int>(steps.size() % 2); }
  friend bool operator==(const TreeVertex&, const TreeVertex&) = default;
};

// Shortlex order on canonical forms: fewer steps first, then step by step.
inline bool tree_vertex_less(const TreeVertex& a, const TreeVertex& b) {
  if (a.steps.size() != b.steps.size()) return a.steps.size() < b.steps.size();
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (a.steps[i] == b.steps[i]) continue;
    return step_less(a.steps[i], b.steps[i]);
  }
  return false;
}

struct TreeVertexLess {
  bool operator()(const TreeVertex& a, const TreeVertex& b) const { return tree_vertex_less(a, b); }
};

struct TreeVertexHash {
  std::size_t operator()(const TreeVertex& t) const noexcept {
    std::size_t h = static_cast<std::size_t>(t.vertex) * 1000003u;
    for (const Step& s : t.steps) {
      h = h * 1315423911u ^ WordHash{}(s.coset);
      h = h * 31u + static_cast<std::size_t>(s.edge * 2 + (s.dir > 0 ? 1 : 0));
    }
    return h;
  }
};

// Reduced path from the base vertex followed by an element of the last vertex group.
// Closed paths (end == base) are the elements of the fundamental group.
struct GroupElement {
  std::vector<Step> steps;
  VertexElement tail;
  int end = 0;

  friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

struct Syllable {
  bool is_edge = false;
  VertexElement elem;
  int edge = 0;
  int dir = 1;
};

enum class ElementClass { Elliptic, Loxodromic };

struct TranslationLength {
  long length = 0;
  ElementClass cls = ElementClass::Elliptic;
};

class BassSerre {
 public:
  explicit BassSerre(const AdmissibleGraph& g) : g_(g) {
    for (const auto& e : g_.edges) {
      if (e.word_from.empty() || e.word_to.empty() || !is_cyclically_reduced(e.word_from) ||
          !is_cyclically_reduced(e.word_to)) {
        throw AdmissibilityError("edge " + e.id + " needs nonempty cyclically reduced words");
      }
    }
  }

  const AdmissibleGraph& graph() const { return g_; }
  int base() const { return g_.base; }

  int depart(int e, int dir) const { return dir > 0 ? edge(e).from : edge(e).to; }
  int arrive(int e, int dir) const { return dir > 0 ? edge(e).to : edge(e).from; }
  const Word& depart_root(int e, int dir) const { return dir > 0 ? edge(e).word_from : edge(e).word_to; }
  const Word& arrive_root(int e, int dir) const { return dir > 0 ? edge(e).word_to : edge(e).word_from; }

  // Image of b_dep^k z_dep^m under the crossing: b_arr^K z_arr^M, returned as (K, M).
  std::pair<long, long> cross(int e, int dir, long k, long m) const {
    const EdgeSpec& s = edge(e);
    if (dir > 0) return {s.signs[1] * m, s.signs[0] * k};
    return {s.signs[0] * m, s.signs[1] * k};
  }

  // Writes a = c * b^k * z^m with c the shortlex-least representative of a<b>.
  static std::pair<Word, long> split_coset(const Word& a, const Word& b) {
    long shift = 0;
    Word c = detail::coset_min(a, b, &shift);
    return {c, -shift};
  }

  GroupElement identity() const { return GroupElement{{}, {}, g_.base}; }

  TreeVertex base_vertex() const { return TreeVertex{{}, g_.base}; }

  GroupElement normalize(const std::vector<Syllable>& raw) const {
    GroupElement out = identity();
    for (const Syllable& s : raw) {
      if (!s.is_edge) {
        out.tail = mul_vertex(out.tail, s.elem);
        continue;
      }
      if (s.edge < 0 || s.edge >= static_cast<int>(g_.edges.size())) {
        throw MalformedInput("unknown edge index " + std::to_string(s.edge));
      }
      if (depart(s.edge, s.dir) != out.end) {
        throw MalformedInput("edge " + edge(s.edge).id + (s.dir > 0 ? "" : "^-1") +
                             " does not leave vertex " + g_.vertices[static_cast<std::size_t>(out.end)].id);
      }
      const Word& b = depart_root(s.edge, s.dir);
      auto [c, k] = split_coset(out.tail.word, b);
      auto [K, M] = cross(s.edge, s.dir, k, out.tail.fiber);
      VertexElement image{ckaw::power(arrive_root(s.edge, s.dir), K), M};
      const int next = arrive(s.edge, s.dir);
      if (c.empty() && !out.steps.empty() && out.steps.back().edge == s.edge &&
          out.steps.back().dir == -s.dir) {
        Word prev = out.steps.back().coset;
        out.steps.pop_back();
        out.tail = mul_vertex(VertexElement{prev, 0}, image);
      } else {
        out.steps.push_back(Step{std::move(c), s.edge, s.dir});
        out.tail = image;
      }
      out.end = next;
    }
    return out;
  }

  std::vector<Syllable> syllables(const GroupElement& g) const {
    std::vector<Syllable> out;
    for (const Step& s : g.steps) {
      if (!s.coset.empty()) out.push_back(Syllable{false, VertexElement{s.coset, 0}, 0, 1});
      out.push_back(Syllable{true, {}, s.edge, s.dir});
    }
    if (!g.tail.trivial()) out.push_back(Syllable{false, g.tail, 0, 1});
    return out;
  }

  std::vector<Syllable> syllables(const TreeVertex& t) const {
    return syllables(GroupElement{t.steps, {}, t.vertex});
  }

  GroupElement multiply(const GroupElement& a, const GroupElement& b) const {
    if (a.end != g_.base) throw MalformedInput("left factor is not a closed path");
    auto raw = syllables(a);
    auto rb = syllables(b);
    raw.insert(raw.end(), rb.begin(), rb.end());
    return normalize(raw);
  }

  GroupElement inverse(const GroupElement& a) const {
    if (a.end != g_.base) throw MalformedInput("element is not a closed path");
    std::vector<Syllable> raw;
    if (!a.tail.trivial()) raw.push_back(Syllable{false, inverse_vertex(a.tail), 0, 1});
    for (auto it = a.steps.rbegin(); it != a.steps.rend(); ++it) {
      raw.push_back(Syllable{true, {}, it->edge, -it->dir});
      if (!it->coset.empty()) {
        raw.push_back(Syllable{false, VertexElement{ckaw::inverse(it->coset), 0}, 0, 1});
      }
    }
    return normalize(raw);
  }

  GroupElement power(const GroupElement& a, long n) const {
    GroupElement base = n >= 0 ? a : inverse(a);
    GroupElement out = identity();
    for (long i = 0; i < std::labs(n); ++i) out = multiply(out, base);
    return out;
  }

  TreeVertex vertex_of(const GroupElement& g) const { return TreeVertex{g.steps, g.end}; }

  TreeVertex act(const GroupElement& g, const TreeVertex& t) const {
    if (g.end != g_.base) throw MalformedInput("element is not a closed path");
    auto raw = syllables(g);
    auto rt = syllables(t);
    raw.insert(raw.end(), rt.begin(), rt.end());
    return vertex_of(normalize(raw));
  }

  static long distance(const TreeVertex& a, const TreeVertex& b) {
    std::size_t k = 0;
    while (k < a.steps.size() && k < b.steps.size() && a.steps[k] == b.steps[k]) ++k;
    return static_cast<long>(a.steps.size() + b.steps.size() - 2 * k);
  }

  // Vertex sequence of the tree geodesic from a to b.
  static std::vector<TreeVertex> geodesic(const TreeVertex& a, const TreeVertex& b,
                                          const BassSerre& bs) {
    std::size_t k = 0;
    while (k < a.steps.size() && k < b.steps.size() && a.steps[k] == b.steps[k]) ++k;
    std::vector<TreeVertex> out;
    for (std::size_t n = a.steps.size(); n > k; --n) out.push_back(bs.truncate(a, n));
    for (std::size_t n = k; n <= b.steps.size(); ++n) out.push_back(bs.truncate(b, n));
    return out;
  }

  TreeVertex truncate(const TreeVertex& t, std::size_t n) const {
    TreeVertex out;
    out.steps.assign(t.steps.begin(), t.steps.begin() + static_cast<long>(n));
    out.vertex = out.steps.empty() ? g_.base : arrive(out.steps.back().edge, out.steps.back().dir);
    return out;
  }

  TranslationLength translation_length(const GroupElement& g) const {
    long d1 = static_cast<long>(g.steps.size());
    long d2 = static_cast<long>(multiply(g, g).steps.size());
    TranslationLength out;
    out.length = std::max(0L, d2 - d1);
    out.cls = out.length > 0 ? ElementClass::Loxodromic : ElementClass::Elliptic;
    return out;
  }

  bool parity_member(const GroupElement& g) const {
    if (g.end != g_.base) throw MalformedInput("element is not a closed path");
    return g.steps.size() % 2 == 0;
  }

  // First `count` coset representatives of F/<b> at vertex v, shortlex order.
  std::vector<Word> coset_reps(int v, const Word& b, std::size_t count) const {
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto key = std::make_pair(v, b.letters);
    auto& list = rep_cache_[key];
    int len = rep_len_[key];
    while (list.size() < count) {
      for (const Word& w : ball(g_.rank(v), len)) {
        if (static_cast<int>(w.size()) != len) continue;
        if (detail::coset_min(w, b) == w) list.push_back(w);
      }
      ++len;
    }
    rep_len_[key] = len;
    return std::vector<Word>(list.begin(), list.begin() + static_cast<long>(count));
  }

  // Parent (if any) and children with at most `cap` coset representatives per edge end.
  std::vector<TreeVertex> neighbors(const TreeVertex& t, std::size_t cap) const {
    std::vector<TreeVertex> out;
    if (!t.steps.empty()) out.push_back(truncate(t, t.steps.size() - 1));
    for (std::size_t e = 0; e < g_.edges.size(); ++e) {
      for (int dir : {1, -1}) {
        const int ei = static_cast<int>(e);
        if (depart(ei, dir) != t.vertex) continue;
        for (const Word& c : coset_reps(t.vertex, depart_root(ei, dir), cap)) {
          if (c.empty() && !t.steps.empty() && t.steps.back().edge == ei && t.steps.back().dir == -dir)
            continue;
          TreeVertex child = t;
          child.steps.push_back(Step{c, ei, dir});
          child.vertex = arrive(ei, dir);
          out.push_back(std::move(child));
        }
      }
    }
    return out;
  }

  std::vector<TreeVertex> tree_ball(const TreeVertex& center, int radius, std::size_t cap) const {
    std::vector<TreeVertex> out{center};
    std::unordered_set<TreeVertex, TreeVertexHash> seen{center};
    std::size_t start = 0;
    for (int r = 0; r < radius; ++r) {
      std::size_t end = out.size();
      for (std::size_t i = start; i < end; ++i) {
        for (auto& n : neighbors(out[i], cap)) {
          if (seen.insert(n).second) out.push_back(std::move(n));
        }
      }
      start = end;
    }
    std::sort(out.begin(), out.end(), TreeVertexLess{});
    return out;
  }

  // Syntax: syllables joined by '.', vertex elements "(word,fiber)", edges "id" or "id^-1",
  // and "1" for the identity.
  GroupElement parse(std::string_view text) const {
    std::vector<Syllable> raw;
    int cur = g_.base;
    std::string s(text);
    // Accept the Unicode minus sign.
    for (std::size_t p; (p = s.find("\xE2\x88\x92")) != std::string::npos;) s.replace(p, 3, "-");
    std::size_t i = 0;
    auto fail = [&](const std::string& why) {
      throw MalformedInput("syntax error at offset " + std::to_string(i) + ": " + why);
    };
    if (s.empty()) fail("empty element");
    while (i < s.size()) {
      if (s[i] == '(') {
        std::size_t close = s.find(')', i);
        if (close == std::string::npos) fail("unclosed '('");
        std::string inner = s.substr(i + 1, close - i - 1);
        std::size_t comma = inner.find(',');
        if (comma == std::string::npos) fail("vertex element needs (word,fiber)");
        VertexElement el;
        el.word = parse_word(inner.substr(0, comma), g_.alphabet(cur));
        try {
          std::size_t used = 0;
          std::string f = inner.substr(comma + 1);
          el.fiber = std::stol(f, &used);
          if (used != f.size()) fail("bad fiber '" + f + "'");
        } catch (const std::logic_error&) {
          fail("bad fiber");
        }
        raw.push_back(Syllable{false, el, 0, 1});
        i = close + 1;
      } else {
        std::size_t dot = s.find('.', i);
        std::string tok = s.substr(i, dot == std::string::npos ? std::string::npos : dot - i);
        if (tok == "1") {
          i += 1;
        } else {
          int dir = 1;
          std::string id = tok;
          if (tok.size() > 3 && tok.compare(tok.size() - 3, 3, "^-1") == 0) {
            dir = -1;
            id = tok.substr(0, tok.size() - 3);
          }
          int e = g_.edge_index(id);
          if (e < 0) fail("unknown edge '" + id + "'");
          if (depart(e, dir) != cur) fail("edge '" + tok + "' does not leave the current vertex");
          raw.push_back(Syllable{true, {}, e, dir});
          cur = arrive(e, dir);
          i += tok.size();
        }
      }
      if (i < s.size()) {
        if (s[i] != '.') fail("expected '.'");
        ++i;
        if (i == s.size()) fail("trailing '.'");
      }
    }
    return normalize(raw);
  }

  TreeVertex parse_vertex(std::string_view text) const { return vertex_of(parse(text)); }

  std::string format(const GroupElement& g) const {
    std::vector<std::string> parts;
    int cur = g_.base;
    for (const Step& s : g.steps) {
      if (!s.coset.empty()) parts.push_back("(" + format_word(s.coset, g_.alphabet(cur)) + ",0)");
      parts.push_back(edge(s.edge).id + (s.dir > 0 ? "" : "^-1"));
      cur = arrive(s.edge, s.dir);
    }
    if (!g.tail.trivial()) {
      parts.push_back("(" + format_word(g.tail.word, g_.alphabet(cur)) + "," +
                      std::to_string(g.tail.fiber) + ")");
    }
    if (parts.empty()) return "1";
    std::string out = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) out += "." + parts[i];
    return out;
  }

  std::string format(const TreeVertex& t) const { return format(GroupElement{t.steps, {}, t.vertex}); }

 private:
  const EdgeSpec& edge(int e) const { return g_.edges.at(static_cast<std::size_t>(e)); }

  static VertexElement mul_vertex(const VertexElement& a, const VertexElement& b) {
    return VertexElement{ckaw::multiply(a.word, b.word), a.fiber + b.fiber};
  }

  static VertexElement inverse_vertex(const VertexElement& a) {
    return VertexElement{ckaw::inverse(a.word), -a.fiber};
  }

  AdmissibleGraph g_;
  mutable std::mutex cache_mu_;
  mutable std::map<std::pair<int, std::vector<Letter>>, std::vector<Word>> rep_cache_;
  mutable std::map<std::pair<int, std::vector<Letter>>, int> rep_len_;
};

}  // namespace ckaw

#endif
