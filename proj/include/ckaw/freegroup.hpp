#ifndef CKAW_FREEGROUP_HPP
#define CKAW_FREEGROUP_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ckaw {

class MalformedInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A letter is +i for the i-th generator (1-based) and -i for its inverse.
using Letter = int;

struct Word {
  std::vector<Letter> letters;

  std::size_t size() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  Letter operator[](std::size_t i) const { return letters[i]; }
  Letter front() const { return letters.front(); }
  Letter back() const { return letters.back(); }

  friend bool operator==(const Word&, const Word&) = default;
};

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (Letter l : w.letters) {
      h ^= static_cast<std::size_t>(l + 64);
      h *= 1099511628211ull;
    }
    return h;
  }
};

// Shortlex: shorter first, then lexicographic in the order a < A < b < B < ...
inline int letter_rank(Letter l) { return 2 * (std::abs(l) - 1) + (l < 0 ? 1 : 0); }

inline bool shortlex_less(const Word& u, const Word& v) {
  if (u.size() != v.size()) return u.size() < v.size();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] != v[i]) return letter_rank(u[i]) < letter_rank(v[i]);
  }
  return false;
}

struct ShortlexLess {
  bool operator()(const Word& u, const Word& v) const { return shortlex_less(u, v); }
};

inline Word reduce(std::span<const Letter> raw, int rank) {
  Word out;
  out.letters.reserve(raw.size());
  for (Letter l : raw) {
    if (l == 0 || std::abs(l) > rank) {
      throw MalformedInput("letter index " + std::to_string(l) + " outside rank " +
                           std::to_string(rank));
    }
    if (!out.letters.empty() && out.letters.back() == -l) {
      out.letters.pop_back();
    } else {
      out.letters.push_back(l);
    }
  }
  return out;
}

inline Word inverse(const Word& w) {
  Word out;
  out.letters.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out.letters[w.size() - 1 - i] = -w[i];
  return out;
}

inline Word multiply(const Word& u, const Word& v) {
  std::size_t k = 0;
  while (k < u.size() && k < v.size() && u[u.size() - 1 - k] == -v[k]) ++k;
  Word out;
  out.letters.reserve(u.size() + v.size() - 2 * k);
  out.letters.insert(out.letters.end(), u.letters.begin(), u.letters.end() - k);
  out.letters.insert(out.letters.end(), v.letters.begin() + k, v.letters.end());
  return out;
}

inline Word power(const Word& w, long n) {
  Word base = n >= 0 ? w : inverse(w);
  Word out;
  for (long i = 0; i < std::labs(n); ++i) out = multiply(out, base);
  return out;
}

inline std::size_t common_prefix(const Word& u, const Word& v) {
  std::size_t k = 0;
  while (k < u.size() && k < v.size() && u[k] == v[k]) ++k;
  return k;
}

// Graph distance in the Cayley tree.
inline long tree_distance(const Word& u, const Word& v) {
  std::size_t k = common_prefix(u, v);
  return static_cast<long>(u.size() + v.size() - 2 * k);
}

// Alphabet used to render words: generator i is letters[i-1], its inverse the uppercase.
struct Alphabet {
  std::string letters = "ab";

  int rank() const { return static_cast<int>(letters.size()); }

  static Alphabet standard(int rank) {
    Alphabet a;
    a.letters.clear();
    for (int i = 0; i < rank; ++i) a.letters.push_back(static_cast<char>('a' + i));
    return a;
  }
};

inline Word parse_word(std::string_view s, const Alphabet& alpha) {
  if (s == "1") return {};
  std::vector<Letter> raw;
  raw.reserve(s.size());
  for (char ch : s) {
    if (ch == ' ') continue;
    char lower = static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch - 'A' + 'a' : ch);
    auto pos = alpha.letters.find(lower);
    if (pos == std::string::npos || lower < 'a' || lower > 'z') {
      throw MalformedInput("character '" + std::string(1, ch) + "' not in alphabet \"" +
                           alpha.letters + "\"");
    }
    Letter l = static_cast<Letter>(pos + 1);
    raw.push_back(ch == lower ? l : -l);
  }
  return reduce(raw, alpha.rank());
}

inline std::string format_word(const Word& w, const Alphabet& alpha) {
  if (w.empty()) return "1";
  std::string out;
  out.reserve(w.size());
  for (Letter l : w.letters) {
    char c = alpha.letters.at(static_cast<std::size_t>(std::abs(l) - 1));
    out.push_back(l > 0 ? c : static_cast<char>(c - 'a' + 'A'));
  }
  return out;
}

inline bool is_cyclically_reduced(const Word& w) {
  return w.size() <= 1 || w.front() != -w.back();
}

inline Word rotate(const Word& w, std::size_t j) {
  Word out;
  if (w.empty()) return out;
  j %= w.size();
  out.letters.insert(out.letters.end(), w.letters.begin() + static_cast<long>(j), w.letters.end());
  out.letters.insert(out.letters.end(), w.letters.begin(), w.letters.begin() + static_cast<long>(j));
  return out;
}

inline Word prefix(const Word& w, std::size_t n) {
  Word out;
  out.letters.assign(w.letters.begin(), w.letters.begin() + static_cast<long>(std::min(n, w.size())));
  return out;
}

class NoRoot : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// w = conjugator * root^power * conjugator^-1 with root cyclically reduced and primitive.
struct CyclicWord {
  Word root;
  long power = 1;
  Word conjugator;

  friend bool operator==(const CyclicWord&, const CyclicWord&) = default;
};

inline CyclicWord primitive_root(const Word& w) {
  if (w.empty()) throw NoRoot("the identity has no primitive root");
  std::size_t k = 0;
  while (2 * k + 1 < w.size() && w[k] == -w[w.size() - 1 - k]) ++k;
  CyclicWord out;
  out.conjugator = prefix(w, k);
  Word core;
  core.letters.assign(w.letters.begin() + static_cast<long>(k), w.letters.end() - static_cast<long>(k));
  const std::size_t n = core.size();
  for (std::size_t p = 1; p <= n; ++p) {
    if (n % p != 0) continue;
    bool periodic = true;
    for (std::size_t i = p; i < n && periodic; ++i) periodic = core[i] == core[i - p];
    if (periodic) {
      out.root = prefix(core, p);
      out.power = static_cast<long>(n / p);
      break;
    }
  }
  return out;
}

inline bool is_primitive(const Word& w) { return !w.empty() && primitive_root(w).power == 1; }

// True iff v occurs among the rotations of u (doubled-string search).
inline bool is_rotation_of(const Word& u, const Word& v) {
  if (u.size() != v.size()) return false;
  if (u.empty()) return true;
  std::vector<Letter> doubled(u.letters);
  doubled.insert(doubled.end(), u.letters.begin(), u.letters.end());
  return std::search(doubled.begin(), doubled.end(),
                     std::boyer_moore_horspool_searcher(v.letters.begin(), v.letters.end())) !=
         doubled.end();
}

inline bool independent(const CyclicWord& u, const CyclicWord& v) {
  return !is_rotation_of(u.root, v.root) && !is_rotation_of(u.root, inverse(v.root));
}

// Least rotation of w in shortlex order.
inline Word least_rotation(const Word& w) {
  Word best = w;
  for (std::size_t j = 1; j < w.size(); ++j) {
    Word r = rotate(w, j);
    if (shortlex_less(r, best)) best = std::move(r);
  }
  return best;
}

struct QgCertificate {
  double lambda = 1.0;
  double c = 0.0;

  friend bool operator==(const QgCertificate&, const QgCertificate&) = default;
};

// The periodic line base * (... root^-1, 1, root, root^2 ...) in the Cayley tree.
// Vertices are indexed by arc length: param p >= 0 is base * (first p letters of root^inf),
// negative params follow root^-1.
struct Axis {
  CyclicWord word;
  Word base;
  int orientation = 1;
  QgCertificate qg_certificate;

  const Word& root() const { return word.root; }
  long period() const { return static_cast<long>(word.root.size()); }

  friend bool operator==(const Axis&, const Axis&) = default;
};

namespace detail {

inline Letter periodic_letter(const Word& r, long i) {
  // i-th letter (0-based) of r^inf for i >= 0, of (r^-1)^inf for i < 0 read as -(i+1).
  const long n = static_cast<long>(r.size());
  if (i >= 0) return r[static_cast<std::size_t>(i % n)];
  long j = -i - 1;
  return -r[static_cast<std::size_t>(n - 1 - (j % n))];
}

// Vertex of the line through 1 at parameter p.
inline Word line_vertex(const Word& r, long p) {
  Word out;
  out.letters.reserve(static_cast<std::size_t>(std::labs(p)));
  if (p >= 0) {
    for (long i = 0; i < p; ++i) out.letters.push_back(periodic_letter(r, i));
  } else {
    for (long i = 0; i < -p; ++i) out.letters.push_back(periodic_letter(r, -i - 1));
  }
  return out;
}

// Projection of z onto the line through 1: (param, distance).
inline std::pair<long, long> project_line(const Word& z, const Word& r) {
  long plus = 0;
  while (plus < static_cast<long>(z.size()) && z[static_cast<std::size_t>(plus)] == periodic_letter(r, plus))
    ++plus;
  if (plus > 0) return {plus, static_cast<long>(z.size()) - plus};
  long minus = 0;
  while (minus < static_cast<long>(z.size()) &&
         z[static_cast<std::size_t>(minus)] == periodic_letter(r, -minus - 1))
    ++minus;
  return {-minus, static_cast<long>(z.size()) - minus};
}

// Shortlex-least element of base * <root>.
inline Word coset_min(const Word& base, const Word& root, long* shift = nullptr) {
  Word rinv = inverse(root);
  Word best = base;
  long best_k = 0;
  // |base * root^k| is convex in k; walk downhill in each direction.
  for (int dir : {1, -1}) {
    Word cur = base;
    long k = 0;
    while (true) {
      Word next = multiply(cur, dir > 0 ? root : rinv);
      if (next.size() > cur.size()) break;
      cur = std::move(next);
      k += dir;
      if (shortlex_less(cur, best)) {
        best = cur;
        best_k = k;
      }
      if (std::labs(k) > static_cast<long>(base.size()) + 2) break;
    }
  }
  if (shift) *shift = best_k;
  return best;
}

}  // namespace detail

// Builds a canonical axis: cyclically reduced primitive root, shortlex-minimal base.
inline Axis make_axis(const Word& w, const Word& base = {}) {
  CyclicWord cw = primitive_root(w);
  Axis ax;
  ax.word.root = cw.root;
  ax.word.power = 1;
  ax.base = detail::coset_min(multiply(base, cw.conjugator), cw.root);
  return ax;
}

inline long axis_param(const Axis& g, const Word& x) {
  Word z = multiply(inverse(g.base), x);
  return g.orientation * detail::project_line(z, g.root()).first;
}

inline Word axis_vertex(const Axis& g, long param) {
  return multiply(g.base, detail::line_vertex(g.root(), g.orientation * param));
}

struct AxisProjection {
  Word point;
  long param = 0;
  long distance = 0;
};

inline AxisProjection project_to_axis(const Word& x, const Axis& g) {
  Word z = multiply(inverse(g.base), x);
  auto [p, d] = detail::project_line(z, g.root());
  return {multiply(g.base, detail::line_vertex(g.root(), p)), g.orientation * p, d};
}

inline long d_gamma(const Axis& g, const Word& x, const Word& y) {
  return std::labs(axis_param(g, x) - axis_param(g, y));
}

inline bool on_axis(const Word& x, const Axis& g) { return project_to_axis(x, g).distance == 0; }

// Canonical form of the underlying unoriented line: least rotation among rotations of
// root and root^-1, base moved accordingly. `orientation` records whether the original
// direction was kept.
inline Axis canonical_line(const Axis& g) {
  const Word& r = g.root();
  Axis best;
  bool have = false;
  for (int sgn : {1, -1}) {
    Word rr = sgn > 0 ? r : inverse(r);
    for (std::size_t j = 0; j < rr.size(); ++j) {
      Word cand = rotate(rr, j);
      if (have && !shortlex_less(cand, best.word.root)) continue;
      // base * l_rr = base * pref * l_cand where rr = pref * suf.
      Axis a;
      a.word.root = cand;
      a.base = detail::coset_min(multiply(g.base, prefix(rr, j)), cand);
      a.orientation = sgn * g.orientation;
      a.qg_certificate = g.qg_certificate;
      best = std::move(a);
      have = true;
    }
  }
  return best;
}

inline bool same_line(const Axis& a, const Axis& b) {
  Axis ca = canonical_line(a), cb = canonical_line(b);
  return ca.word.root == cb.word.root && ca.base == cb.base;
}

struct LineKey {
  Word root;
  Word base;
  friend bool operator==(const LineKey&, const LineKey&) = default;
};

inline LineKey line_key(const Axis& a) {
  Axis c = canonical_line(a);
  return {c.word.root, c.base};
}

struct LineKeyHash {
  std::size_t operator()(const LineKey& k) const noexcept {
    return WordHash{}(k.root) * 31u ^ WordHash{}(k.base);
  }
};

// Shortest segment between two axes. Width 0 when they meet; then both ends are the
// first common vertex in the direction of `a`.
struct Bridge {
  Word on_a;
  Word on_b;
  long param_a = 0;
  long param_b = 0;
  long width = 0;
};

class CoincidentLines : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Bridge bridge(const Axis& a, const Axis& b) {
  Word p = axis_vertex(a, 0);
  AxisProjection q = project_to_axis(p, b);
  AxisProjection back = project_to_axis(q.point, a);
  Bridge out;
  if (back.distance > 0) {
    out.on_a = back.point;
    out.on_b = q.point;
    out.param_a = back.param;
    out.param_b = q.param;
    out.width = back.distance;
    return out;
  }
  // The lines meet; scan b around q for the common segment.
  const long limit = a.period() + b.period() + 2;
  long lo = q.param, hi = q.param;
  while (hi - q.param <= limit && on_axis(axis_vertex(b, hi + 1), a)) ++hi;
  while (q.param - lo <= limit && on_axis(axis_vertex(b, lo - 1), a)) --lo;
  if (hi - q.param > limit || q.param - lo > limit) {
    throw CoincidentLines("axes share an unbounded segment");
  }
  long best_b = lo;
  long best_a = axis_param(a, axis_vertex(b, lo));
  long other = axis_param(a, axis_vertex(b, hi));
  if (other < best_a) {
    best_a = other;
    best_b = hi;
  }
  out.on_a = out.on_b = axis_vertex(b, best_b);
  out.param_a = best_a;
  out.param_b = best_b;
  out.width = 0;
  return out;
}

// Length of the common segment of two axes (0 if they are disjoint or meet in a point).
inline long overlap_length(const Axis& a, const Axis& b) {
  Bridge br = bridge(a, b);
  if (br.width > 0) return 0;
  long n = 0;
  const long limit = a.period() + b.period() + 2;
  for (int dir : {1, -1}) {
    long t = br.param_b;
    while (std::labs(t - br.param_b) <= limit && on_axis(axis_vertex(b, t + dir), a)) t += dir;
    n += std::labs(t - br.param_b);
  }
  return n;
}

// Cayley tree neighbours of w in F_rank.
inline std::vector<Word> tree_neighbors(const Word& w, int rank) {
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(2 * rank));
  for (int i = 1; i <= rank; ++i) {
    for (Letter l : {i, -i}) {
      Word x;
      x.letters = {l};
      out.push_back(multiply(w, x));
    }
  }
  return out;
}

// All reduced words of length <= radius, in shortlex order.
inline std::vector<Word> ball(int rank, int radius) {
  std::vector<Word> out{Word{}};
  std::size_t layer_start = 0;
  for (int r = 0; r < radius; ++r) {
    std::size_t layer_end = out.size();
    for (std::size_t i = layer_start; i < layer_end; ++i) {
      for (int g = 1; g <= rank; ++g) {
        for (Letter l : {g, -g}) {
          const Word& w = out[i];
          if (!w.empty() && w.back() == -l) continue;
          Word x = w;
          x.letters.push_back(l);
          out.push_back(std::move(x));
        }
      }
    }
    layer_start = layer_end;
  }
  std::stable_sort(out.begin(), out.end(), ShortlexLess{});
  return out;
}

// Geodesic vertex sequence from u to v in the Cayley tree.
inline std::vector<Word> tree_geodesic(const Word& u, const Word& v) {
  std::size_t k = common_prefix(u, v);
  std::vector<Word> out;
  for (std::size_t n = u.size(); n > k; --n) out.push_back(prefix(u, n));
  for (std::size_t n = k; n <= v.size(); ++n) out.push_back(prefix(v, n));
  return out;
}

}  // namespace ckaw

#endif
