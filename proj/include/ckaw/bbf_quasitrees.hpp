#ifndef CKAW_BBF_QUASITREES_HPP
#define CKAW_BBF_QUASITREES_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ckaw/admissible.hpp"
#include "ckaw/glued_hyperbolic.hpp"

namespace ckaw {

class FamilyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PartitionError : public std::runtime_error {
 public:
  PartitionError(const std::string& msg, Word v) : std::runtime_error(msg), vertex(std::move(v)) {}
  Word vertex;
};

inline long cutoff(long t, long K) {
  if (K < 0) throw std::invalid_argument("cutoff threshold must be nonnegative");
  return t >= K ? t : 0;
}

// Least rotation among rotations of r and r^-1: one representative per unoriented class.
inline Word class_root(const Word& w) { return canonical_line(make_axis(w)).word.root; }

// ---- ball windows in a Cayley tree ---------------------------------------------

struct TreeBall {
  int rank = 2;
  int radius = 0;
  std::vector<Word> vertices;  // shortlex order, identity first
  std::unordered_map<Word, std::size_t, WordHash> index;
  std::vector<std::vector<std::size_t>> adj;

  TreeBall() = default;
  TreeBall(int rank_, int radius_) : rank(rank_), radius(radius_), vertices(ball(rank_, radius_)) {
    for (std::size_t i = 0; i < vertices.size(); ++i) index.emplace(vertices[i], i);
    adj.resize(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i)
      for (const Word& nb : tree_neighbors(vertices[i], rank)) {
        auto it = index.find(nb);
        if (it != index.end()) adj[i].push_back(it->second);
      }
  }

  bool contains(const Word& w) const { return static_cast<int>(w.size()) <= radius; }
};

// Parameter interval of the line inside the ball, empty (lo > hi) if the line misses it.
inline std::pair<long, long> window_range(const Axis& g, int radius) {
  AxisProjection p = project_to_axis(Word{}, g);
  long slack = radius - p.distance;
  return {p.param - slack, p.param + slack};
}

// ---- quasi-line families ----------------------------------------------------------

struct QuasiLineFamily {
  int rank = 2;
  int vertex = 0;
  long K_tilde = 0;
  long annulus = 0;
  std::vector<Word> F;
  std::vector<Word> boundary;  // classes of the boundary lines
  std::vector<Word> classes;   // all classes, sorted, boundary included
  std::size_t annulus_size = 0;
  std::size_t uncovered_h = 0;  // annulus words h with no f making hf cyclically reduced
  bool certified = true;        // every class root is cyclically reduced, so each line is geodesic

  bool has_class(const Word& root) const { return std::binary_search(classes.begin(), classes.end(), root, ShortlexLess{}); }
  bool is_boundary(const Word& root) const {
    return std::find(boundary.begin(), boundary.end(), root) != boundary.end();
  }
};

// Three pairwise independent cyclically reduced words such that for every pair of end
// letters of h some f makes h*f reduced and cyclically reduced.
inline std::vector<Word> default_triple(int rank) {
  if (rank == 2) {
    Alphabet a = Alphabet::standard(2);
    return {parse_word("ab", a), parse_word("AAB", a), parse_word("bba", a)};
  }
  std::vector<Word> cands;
  for (const Word& w : ball(rank, 3))
    if (w.size() >= 2 && is_cyclically_reduced(w) && is_primitive(w)) cands.push_back(w);
  std::vector<Letter> letters;
  for (int i = 1; i <= rank; ++i) {
    letters.push_back(i);
    letters.push_back(-i);
  }
  auto covers = [&](const std::vector<Word>& F) {
    for (Letter s : letters)
      for (Letter e : letters) {
        bool ok = false;
        for (const Word& f : F) ok = ok || (f.letters.front() != -e && f.letters.back() != -s);
        if (!ok) return false;
      }
    return true;
  };
  for (std::size_t i = 0; i < cands.size(); ++i)
    for (std::size_t j = i + 1; j < cands.size(); ++j)
      for (std::size_t k = j + 1; k < cands.size(); ++k) {
        std::vector<Word> F{cands[i], cands[j], cands[k]};
        CyclicWord a = primitive_root(F[0]), b = primitive_root(F[1]), c = primitive_root(F[2]);
        if (independent(a, b) && independent(a, c) && independent(b, c) && covers(F)) return F;
      }
  throw FamilyError("no covering independent triple of length at most 3");
}

inline QuasiLineFamily generate_quasilines(const AdmissibleGraph& g, int v, long K_tilde, std::vector<Word> F = {},
                                           long annulus = 0) {
  QuasiLineFamily fam;
  fam.rank = g.rank(v);
  fam.vertex = v;
  fam.K_tilde = K_tilde;
  fam.annulus = annulus;
  fam.F = F.empty() ? default_triple(fam.rank) : std::move(F);
  for (std::size_t i = 0; i < fam.F.size(); ++i)
    for (std::size_t j = i + 1; j < fam.F.size(); ++j)
      if (!independent(primitive_root(fam.F[i]), primitive_root(fam.F[j])))
        throw FamilyError("loxodromic triple is not pairwise independent");
  std::set<Word, ShortlexLess> classes;
  for (const EdgeEnd& end : edge_ends_at(g, v)) {
    Word r = class_root(edge_word(g, end));
    fam.boundary.push_back(r);
    classes.insert(r);
  }
  std::sort(fam.boundary.begin(), fam.boundary.end(), ShortlexLess{});
  fam.boundary.erase(std::unique(fam.boundary.begin(), fam.boundary.end()), fam.boundary.end());
  const long lo = std::max(1L, K_tilde - annulus), hi = K_tilde + annulus;
  for (const Word& h : ball(fam.rank, static_cast<int>(hi))) {
    if (static_cast<long>(h.size()) < lo) continue;
    ++fam.annulus_size;
    bool covered = false;
    for (const Word& f : fam.F) {
      Word hf = multiply(h, f);
      if (hf.empty()) continue;
      covered = covered || (hf.size() == h.size() + f.size() && is_cyclically_reduced(hf));
      CyclicWord cw = primitive_root(hf);
      fam.certified = fam.certified && is_cyclically_reduced(cw.root);
      classes.insert(class_root(cw.root));
    }
    if (!covered) ++fam.uncovered_h;
  }
  if (fam.annulus_size == 0) throw FamilyError("annulus is empty");
  fam.classes.assign(classes.begin(), classes.end());
  return fam;
}

// Canonical lines of the family passing through p.
inline std::vector<Axis> lines_through(const QuasiLineFamily& fam, const Word& p) {
  std::vector<Axis> out;
  std::unordered_set<LineKey, LineKeyHash> seen;
  for (const Word& r : fam.classes) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      Axis a = canonical_line(make_axis(rotate(r, j), p));
      if (seen.insert({a.word.root, a.base}).second) out.push_back(std::move(a));
    }
  }
  return out;
}

inline bool line_less(const Axis& a, const Axis& b) {
  long da = project_to_axis(Word{}, a).distance, db = project_to_axis(Word{}, b).distance;
  if (da != db) return da < db;
  if (a.word.root != b.word.root) return shortlex_less(a.word.root, b.word.root);
  return shortlex_less(a.base, b.base);
}

// All family lines meeting the ball of the given radius, nearest to the identity first.
inline std::vector<Axis> lines_in_ball(const QuasiLineFamily& fam, int radius) {
  std::unordered_set<LineKey, LineKeyHash> seen;
  std::vector<Axis> out;
  // Every line meeting the ball passes through a vertex of the ball at its projection of 1;
  // enumerating lines through every ball vertex finds all of them.
  for (const Word& p : ball(fam.rank, radius)) {
    for (Axis& a : lines_through(fam, p)) {
      if (seen.insert({a.word.root, a.base}).second) out.push_back(std::move(a));
    }
  }
  std::sort(out.begin(), out.end(), line_less);
  return out;
}

inline long line_distance(const Axis& a, const Axis& b) { return bridge(a, b).width; }

// Diameter of the projection of b onto a (exact in a tree).
inline long projection_diameter(const Axis& a, const Axis& b) { return overlap_length(a, b); }

struct ProjectionReport {
  long max_diameter = 0;
  std::vector<std::pair<std::size_t, std::size_t>> offending;
  bool pass = true;
};

inline ProjectionReport bounded_projection_check(const std::vector<Axis>& lines, long theta) {
  ProjectionReport rep;
  for (std::size_t i = 0; i < lines.size(); ++i)
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      long d = projection_diameter(lines[i], lines[j]);
      rep.max_diameter = std::max(rep.max_diameter, d);
      if (d > theta) rep.offending.emplace_back(i, j);
    }
  rep.pass = rep.offending.empty();
  return rep;
}

// ---- greedy partition -------------------------------------------------------------

// Multi-source distances in the ball from all vertices of the given lines.
inline std::vector<long> coverage_distances(const TreeBall& B, const std::vector<Axis>& lines,
                                            const std::vector<std::size_t>& members) {
  std::vector<long> dist(B.vertices.size(), -1);
  std::deque<std::size_t> q;
  for (std::size_t m : members) {
    auto [lo, hi] = window_range(lines[m], B.radius);
    for (long p = lo; p <= hi; ++p) {
      std::size_t id = B.index.at(axis_vertex(lines[m], p));
      if (dist[id] < 0) {
        dist[id] = 0;
        q.push_back(id);
      }
    }
  }
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop_front();
    for (std::size_t v : B.adj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return dist;
}

struct PartitionCheck {
  std::size_t separation_violations = 0;
  std::size_t coverage_violations = 0;
  bool ok() const { return separation_violations == 0 && coverage_violations == 0; }
};

inline PartitionCheck verify_partition(const TreeBall& B, const std::vector<Axis>& lines,
                                       const std::vector<std::vector<std::size_t>>& classes, long D, long R) {
  PartitionCheck c;
  for (const auto& cls : classes) {
    for (std::size_t i = 0; i < cls.size(); ++i)
      for (std::size_t j = i + 1; j < cls.size(); ++j)
        if (line_distance(lines[cls[i]], lines[cls[j]]) < D) ++c.separation_violations;
    for (long d : coverage_distances(B, lines, cls))
      if (d < 0 || d > D + R) ++c.coverage_violations;
  }
  return c;
}

// Classes of pairwise D-separated lines whose (D+R)-neighborhoods each cover the ball.
// Lines are taken in the given order; a class may reuse lines of earlier classes.
inline std::vector<std::vector<std::size_t>> greedy_partition(const TreeBall& B, const std::vector<Axis>& lines,
                                                              long D, long R) {
  const std::size_t n = lines.size();
  std::vector<std::vector<long>> dist(n, std::vector<long>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = line_distance(lines[i], lines[j]);
  std::vector<char> assigned(n, 0);
  std::vector<std::vector<std::size_t>> classes;
  auto fits = [&](const std::vector<std::size_t>& cls, std::size_t k) {
    return std::all_of(cls.begin(), cls.end(), [&](std::size_t m) { return m != k && dist[m][k] >= D; });
  };
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (assigned[seed]) continue;
    std::vector<std::size_t> cls{seed};
    for (int pass : {0, 1})
      for (std::size_t k = 0; k < n; ++k)
        if (static_cast<bool>(assigned[k]) == static_cast<bool>(pass) && fits(cls, k)) cls.push_back(k);
    // Coverage repair: add a separated line near every uncovered vertex.
    for (;;) {
      auto cov = coverage_distances(B, lines, cls);
      auto bad = std::find_if(cov.begin(), cov.end(), [&](long d) { return d < 0 || d > D + R; });
      if (bad == cov.end()) break;
      const Word& v = B.vertices[static_cast<std::size_t>(bad - cov.begin())];
      std::optional<std::size_t> pick;
      for (std::size_t k = 0; k < n && !pick; ++k)
        if (project_to_axis(v, lines[k]).distance <= R && fits(cls, k)) pick = k;
      if (!pick) throw PartitionError("no separated line covers vertex", v);
      cls.push_back(*pick);
    }
    std::sort(cls.begin(), cls.end());
    for (std::size_t k : cls) assigned[k] = 1;
    classes.push_back(std::move(cls));
  }
  return classes;
}

// Smallest R such that every ball vertex lies within R of some family line.
inline long covering_radius(const TreeBall& B, const std::vector<Axis>& lines) {
  std::vector<std::size_t> all(lines.size());
  std::iota(all.begin(), all.end(), 0);
  auto d = coverage_distances(B, lines, all);
  return *std::max_element(d.begin(), d.end());
}

// ---- quasi-trees of quasi-lines ---------------------------------------------------

enum class Admission { Bbf, All };

// Lines of one class, each cut to its segment inside the ball, joined by unit bridge edges
// from the projection of one line onto the other to the reverse projection.
struct QuasiTree {
  std::vector<Axis> lines;
  std::vector<std::pair<long, long>> range;
  std::vector<std::size_t> offset;
  std::vector<std::pair<std::size_t, std::size_t>> bridges;
  std::vector<std::vector<std::size_t>> adj;
  std::size_t node_count = 0;
  long K = 0;
  Admission rule = Admission::Bbf;

  std::optional<std::size_t> node(std::size_t line, long param) const {
    if (param < range[line].first || param > range[line].second) return std::nullopt;
    return offset[line] + static_cast<std::size_t>(param - range[line].first);
  }

  std::pair<std::size_t, long> where(std::size_t id) const {
    std::size_t l = static_cast<std::size_t>(std::upper_bound(offset.begin(), offset.end(), id) - offset.begin()) - 1;
    return {l, range[l].first + static_cast<long>(id - offset[l])};
  }

  std::vector<long> bfs(std::size_t src) const {
    std::vector<long> dist(node_count, -1);
    std::deque<std::size_t> q{src};
    dist[src] = 0;
    while (!q.empty()) {
      std::size_t u = q.front();
      q.pop_front();
      for (std::size_t v : adj[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push_back(v);
        }
    }
    return dist;
  }

  std::size_t components() const {
    std::vector<char> seen(node_count, 0);
    std::size_t c = 0;
    for (std::size_t s = 0; s < node_count; ++s) {
      if (seen[s]) continue;
      ++c;
      for (std::size_t i = 0; i < node_count; ++i) seen[i] = seen[i] || (bfs(s)[i] >= 0);
    }
    return c;
  }
};

// d_beta(g, h): distance along beta between the projections of two lines disjoint from it.
inline long line_projection_gap(const Axis& beta, const Axis& g, const Axis& h) {
  Bridge a = bridge(beta, g), b = bridge(beta, h);
  long lo = std::min(a.param_a, b.param_a), hi = std::max(a.param_a, b.param_a);
  if (a.width == 0) {
    long o = overlap_length(beta, g);
    hi = std::max(hi, a.param_a + o);
  }
  if (b.width == 0) {
    long o = overlap_length(beta, h);
    hi = std::max(hi, b.param_a + o);
  }
  return hi - lo;
}

inline QuasiTree build_quasitree(const std::vector<Axis>& all, const std::vector<std::size_t>& members, int radius,
                                 long K, Admission rule = Admission::Bbf) {
  QuasiTree qt;
  qt.K = K;
  qt.rule = rule;
  for (std::size_t m : members) {
    qt.lines.push_back(all[m]);
    qt.range.push_back(window_range(all[m], radius));
    qt.offset.push_back(qt.node_count);
    qt.node_count += static_cast<std::size_t>(qt.range.back().second - qt.range.back().first + 1);
  }
  qt.adj.assign(qt.node_count, {});
  auto link = [&](std::size_t a, std::size_t b) {
    qt.adj[a].push_back(b);
    qt.adj[b].push_back(a);
  };
  const std::size_t n = qt.lines.size();
  for (std::size_t i = 0; i < n; ++i)
    for (long p = qt.range[i].first; p < qt.range[i].second; ++p) link(*qt.node(i, p), *qt.node(i, p + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rule == Admission::Bbf) {
        bool blocked = false;
        for (std::size_t b = 0; b < n && !blocked; ++b)
          if (b != i && b != j) blocked = line_projection_gap(qt.lines[b], qt.lines[i], qt.lines[j]) > K;
        if (blocked) continue;
      }
      Bridge br = bridge(qt.lines[i], qt.lines[j]);
      auto a = qt.node(i, br.param_a), b = qt.node(j, br.param_b);
      if (a && b) {
        link(*a, *b);
        qt.bridges.emplace_back(i, j);
      }
    }
  }
  return qt;
}

struct BottleneckReport {
  long delta = 0;  // max over sampled pairs
  std::size_t pairs = 0;
  std::size_t disconnected = 0;
};

// For sampled node pairs u, v with a geodesic midpoint m: the largest value, over u-v paths,
// of the path's closest approach to m. Every path then passes within that value of m.
inline BottleneckReport bottleneck(const QuasiTree& qt, std::size_t samples, std::uint64_t seed) {
  BottleneckReport rep;
  if (qt.node_count < 2) return rep;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, qt.node_count - 1);
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t u = pick(rng), v = pick(rng);
    auto du = qt.bfs(u);
    if (du[v] < 0) {
      ++rep.disconnected;
      continue;
    }
    ++rep.pairs;
    auto dv = qt.bfs(v);
    // A midpoint: a node on some geodesic with du = floor(d/2).
    long half = du[v] / 2;
    std::size_t m = 0;
    for (std::size_t z = 0; z < qt.node_count; ++z)
      if (du[z] == half && dv[z] == du[v] - half) {
        m = z;
        break;
      }
    auto dm = qt.bfs(m);
    // Maximin path value from u to v with node weights dm.
    std::vector<long> best(qt.node_count, -1);
    std::priority_queue<std::pair<long, std::size_t>> pq;
    best[u] = dm[u];
    pq.push({dm[u], u});
    while (!pq.empty()) {
      auto [w, z] = pq.top();
      pq.pop();
      if (w < best[z]) continue;
      for (std::size_t y : qt.adj[z]) {
        long cand = std::min(w, dm[y]);
        if (cand > best[y]) {
          best[y] = cand;
          pq.push({cand, y});
        }
      }
    }
    rep.delta = std::max(rep.delta, best[v]);
  }
  return rep;
}

// Max over sampled parameter pairs on each line of (quasi-tree distance - line distance).
inline long line_distortion(const QuasiTree& qt) {
  long worst = 0;
  for (std::size_t i = 0; i < qt.lines.size(); ++i) {
    auto [lo, hi] = qt.range[i];
    auto d = qt.bfs(*qt.node(i, lo));
    for (long p = lo; p <= hi; ++p) worst = std::max(worst, std::labs((p - lo) - d[*qt.node(i, p)]));
  }
  return worst;
}

// ---- distance formulas ---------------------------------------------------------------

struct Contribution {
  Axis line;
  long overlap = 0;
};

// Family lines sharing at least `min_overlap` edges with the geodesic [x, y], with the
// overlap lengths. In a tree d_gamma(x, y) equals that overlap.
inline std::vector<Contribution> contributing_lines(const QuasiLineFamily& fam, const Word& x, const Word& y,
                                                   long min_overlap) {
  std::vector<Contribution> out;
  std::vector<Word> path = tree_geodesic(x, y);
  const long d = static_cast<long>(path.size()) - 1;
  std::vector<Letter> step(static_cast<std::size_t>(std::max(0L, d)));
  for (long i = 0; i < d; ++i) {
    Word w = multiply(inverse(path[static_cast<std::size_t>(i)]), path[static_cast<std::size_t>(i + 1)]);
    step[static_cast<std::size_t>(i)] = w[0];
  }
  for (const Word& r : fam.classes) {
    for (const Word& rr : {r, inverse(r)}) {
      const long n = static_cast<long>(rr.size());
      for (long j = 0; j < n; ++j) {
        // Line through path[i] reading rr rotated by j forwards.
        for (long i = 0; i < d; ++i) {
          auto letter = [&](long k) { return rr[static_cast<std::size_t>(((j + k) % n + n) % n)]; };
          if (i > 0 && step[static_cast<std::size_t>(i - 1)] == letter(-1)) continue;  // not a maximal start
          long m = 0;
          while (i + m < d && step[static_cast<std::size_t>(i + m)] == letter(m)) ++m;
          if (m == 0 || m < min_overlap) continue;
          out.push_back({make_axis(rotate(rr, static_cast<std::size_t>(j)), path[static_cast<std::size_t>(i)]), m});
        }
      }
    }
  }
  return out;
}

inline long cutoff_sum(const QuasiLineFamily& fam, const Word& x, const Word& y, long K) {
  long s = 0;
  for (const auto& c : contributing_lines(fam, x, y, std::max(1L, K))) s += cutoff(c.overlap, K);
  return s;
}

struct FormulaRow {
  std::size_t id = 0;
  long d = 0;
  long sum = 0;
  long d_tree = 0;
  bool truncated = false;
};

struct FormulaFit {
  double N = 1.0;   // lambda envelope of (d, sum + d_tree)
  double L = 0.0;   // additive constant of the lower envelope sum/N + d_tree - L <= d
  std::vector<FormulaRow> rows;
  std::size_t excluded = 0;
  std::size_t lower_violations = 0;
};

inline void finish_fit(FormulaFit& fit) {
  fit.N = 1.0;
  for (const auto& r : fit.rows) fit.N = std::max(fit.N, lambda_envelope(r.d, r.sum + r.d_tree));
  fit.L = 0.0;
  for (const auto& r : fit.rows)
    fit.L = std::max(fit.L, static_cast<double>(r.sum) / fit.N + static_cast<double>(r.d_tree) - static_cast<double>(r.d));
  fit.lower_violations = 0;
  for (const auto& r : fit.rows)
    if (static_cast<double>(r.sum) / fit.N + static_cast<double>(r.d_tree) - fit.L > static_cast<double>(r.d) + 1e-9)
      ++fit.lower_violations;
}

// Piece-level formula: d(x, y) against the cutoff sum over the family, exact enumeration.
inline FormulaFit piece_formula_fit(const QuasiLineFamily& fam, const std::vector<std::pair<Word, Word>>& pairs, long K) {
  FormulaFit fit;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [x, y] = pairs[i];
    fit.rows.push_back({i, tree_distance(x, y), cutoff_sum(fam, x, y, K), 0, false});
  }
  finish_fit(fit);
  return fit;
}

// Formula for the glued space of the given parity: per piece the cutoff sum between entry
// and exit points of a window geodesic, per flat link the binding-line term, plus d_T.
inline FormulaFit glued_formula_fit(const ModelSpace& X, int parity, const std::vector<QuasiLineFamily>& fams,
                                    const std::vector<std::pair<XPoint, XPoint>>& samples, long K, long radius) {
  FormulaFit fit;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    GluedPoint a = phi_part(X, samples[i].first, parity), b = phi_part(X, samples[i].second, parity);
    GluedSpace G = glued_corridor(X, parity, a, b, radius);
    auto s = G.node(a), t = G.node(b);
    std::vector<std::size_t> path = s && t ? G.shortest_path(*s, *t) : std::vector<std::size_t>{};
    if (path.empty()) {
      ++fit.excluded;
      continue;
    }
    FormulaRow row{i, static_cast<long>(path.size()) - 1, 0, BassSerre::distance(a.sigma, b.sigma), false};
    std::size_t k = 0;
    while (k < path.size()) {
      GluedPoint first = G.point(path[k]);
      std::size_t e = k;
      while (e + 1 < path.size() && G.point(path[e + 1]).sigma == first.sigma) ++e;
      GluedPoint last = G.point(path[e]);
      if (first.binding) {
        row.sum += cutoff(std::labs(last.t - first.t), K);
      } else {
        row.sum += cutoff_sum(fams.at(static_cast<std::size_t>(first.sigma.vertex)), first.ybar, last.ybar, K);
      }
      // Touching the window boundary marks a possibly clipped term.
      for (std::size_t z = k; z <= e; ++z) row.truncated = row.truncated || G.adj[path[z]].size() < 2;
      k = e + 1;
    }
    fit.rows.push_back(row);
  }
  finish_fit(fit);
  return fit;
}

// ---- product embedding -----------------------------------------------------------------

struct ClassImage {
  std::size_t line = 0;  // index into the class quasi-tree
  long param = 0;
  long distance = 0;     // from x to the chosen point
};

// Nearest point of the class union, first line in class order on ties.
inline ClassImage class_image(const QuasiTree& qt, const Word& x) {
  ClassImage best{0, 0, -1};
  for (std::size_t i = 0; i < qt.lines.size(); ++i) {
    AxisProjection p = project_to_axis(x, qt.lines[i]);
    if (best.distance < 0 || p.distance < best.distance) best = {i, p.param, p.distance};
  }
  return best;
}

struct ProductEmbedding {
  TreeBall window;
  std::vector<Axis> lines;
  std::vector<std::vector<std::size_t>> classes;
  std::vector<QuasiTree> trees;
  long D = 0, R = 0, K = 0;
};

inline ProductEmbedding build_product(const QuasiLineFamily& fam, int radius, long D, long K,
                                      std::optional<long> R = std::nullopt) {
  ProductEmbedding pe;
  pe.window = TreeBall(fam.rank, radius);
  pe.lines = lines_in_ball(fam, radius);
  pe.D = D;
  pe.K = K;
  pe.R = R ? *R : covering_radius(pe.window, pe.lines);
  pe.classes = greedy_partition(pe.window, pe.lines, D, pe.R);
  for (const auto& cls : pe.classes) pe.trees.push_back(build_quasitree(pe.lines, cls, radius, K));
  return pe;
}

// Sum over classes of the quasi-tree distance between class images.
inline long product_distance(const ProductEmbedding& pe, const Word& x, const Word& y) {
  long s = 0;
  for (const QuasiTree& qt : pe.trees) {
    ClassImage a = class_image(qt, x), b = class_image(qt, y);
    if (a.distance > pe.D + pe.R || b.distance > pe.D + pe.R)
      throw PartitionError("class does not cover the point within R + D", a.distance > pe.D + pe.R ? x : y);
    long d = qt.bfs(*qt.node(a.line, a.param))[*qt.node(b.line, b.param)];
    if (d < 0) throw std::runtime_error("class quasi-tree is disconnected");
    s += d;
  }
  return s;
}

struct EmbedFit {
  double lambda = 1.0;
  std::vector<std::pair<long, long>> rows;  // (d, image)
};

inline EmbedFit product_fit(const ProductEmbedding& pe, const std::vector<std::pair<Word, Word>>& pairs) {
  EmbedFit fit;
  for (const auto& [x, y] : pairs) {
    long d = tree_distance(x, y), s = product_distance(pe, x, y);
    fit.rows.emplace_back(d, s);
    fit.lambda = std::max(fit.lambda, lambda_envelope(d, s));
  }
  return fit;
}

// ---- local finiteness --------------------------------------------------------------

// Max over sampled length-theta segments (inside the inner ball) of the number of lines whose
// R-neighborhood contains the segment.
inline std::size_t local_multiplicity(const std::vector<Axis>& lines, int rank, int inner, long theta, long R,
                                      std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Word> pts = ball(rank, inner);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::size_t worst = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Word& a = pts[pick(rng)];
    // Extend a by theta letters away from the identity when possible.
    Word b = a;
    while (static_cast<long>(tree_distance(a, b)) < theta) {
      auto nb = tree_neighbors(b, rank);
      std::erase_if(nb, [&](const Word& w) { return w.size() < b.size(); });
      b = nb[rng() % nb.size()];
    }
    std::vector<Word> seg = tree_geodesic(a, b);
    std::size_t count = 0;
    for (const Axis& g : lines) {
      bool inside = std::all_of(seg.begin(), seg.end(), [&](const Word& w) { return project_to_axis(w, g).distance <= R; });
      count += inside;
    }
    worst = std::max(worst, count);
  }
  return worst;
}

// Translates of line `ref` in the list (same class, different line) whose projection onto ref
// has diameter at least theta.
inline std::size_t long_projection_translates(const std::vector<Axis>& lines, const Axis& ref, long theta) {
  std::size_t c = 0;
  for (const Axis& g : lines) {
    if (g.word.root != ref.word.root || same_line(g, ref)) continue;
    c += projection_diameter(ref, g) >= theta;
  }
  return c;
}

}  // namespace ckaw

#endif
