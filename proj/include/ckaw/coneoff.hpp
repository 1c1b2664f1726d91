#ifndef CKAW_CONEOFF_HPP
#define CKAW_CONEOFF_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ckaw/bbf_quasitrees.hpp"

namespace ckaw {

// Weights are in half-units: a tree edge costs 2, a half-edge of the coned-off Cayley graph 1,
// a radial edge of a multicone of radius r costs 2r.
inline constexpr long kTreeEdge = 2;
inline constexpr long kHalfEdge = 1;
inline constexpr long kDefaultConeRadius = 2;

// Adjacent tree vertex whose plane line at sigma is the peripheral coset of p for the given
// departing edge end.
inline TreeVertex neighbor_through(const BassSerre& bs, const TreeVertex& sigma, const Word& p, int edge, int dir) {
  Word c = detail::coset_min(p, bs.depart_root(edge, dir));
  if (c.empty() && !sigma.steps.empty() && sigma.steps.back().edge == edge && sigma.steps.back().dir == -dir)
    return bs.truncate(sigma, sigma.steps.size() - 1);
  TreeVertex child = sigma;
  child.steps.push_back(Step{std::move(c), edge, dir});
  child.vertex = bs.arrive(edge, dir);
  return child;
}

struct ConedRegion {
  TreeVertex sigma;
  std::vector<Word> ybar;
};

// Pieces of one parity with a cone vertex per adjacent tree vertex. In a single-piece space
// the cone vertex of tau is the cone point of the peripheral coset plane_line(sigma, tau);
// in the multi-piece space it is the apex of the multicone at tau.
class ConedSpace {
 public:
  struct Piece {
    TreeVertex sigma;
    std::vector<Word> ybar;
    std::unordered_map<Word, std::size_t, WordHash> index;
    std::size_t offset = 0;
  };

  int parity = 0;
  long spoke = kHalfEdge;
  std::vector<Piece> pieces;
  std::vector<TreeVertex> apexes;  // node base_count + i
  std::unordered_map<TreeVertex, std::size_t, TreeVertexHash> apex_index;
  std::size_t base_count = 0;
  std::vector<std::vector<std::pair<std::size_t, long>>> adj;

  std::size_t node_count() const { return adj.size(); }
  bool is_apex(std::size_t id) const { return id >= base_count; }

  std::optional<std::size_t> node(const TreeVertex& sigma, const Word& y) const {
    for (const Piece& p : pieces) {
      if (!(p.sigma == sigma)) continue;
      auto it = p.index.find(y);
      if (it != p.index.end()) return p.offset + it->second;
    }
    return std::nullopt;
  }

  std::size_t piece_of(std::size_t id) const {
    std::size_t k = 0;
    while (k + 1 < pieces.size() && pieces[k + 1].offset <= id) ++k;
    return k;
  }

  const Word& ybar(std::size_t id) const {
    const Piece& p = pieces[piece_of(id)];
    return p.ybar[id - p.offset];
  }

  std::vector<long> dijkstra(std::size_t src) const {
    std::vector<long> dist(node_count(), -1);
    using Item = std::pair<long, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0;
    pq.push({0, src});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (auto [v, w] : adj[u]) {
        if (dist[v] < 0 || d + w < dist[v]) {
          dist[v] = d + w;
          pq.push({dist[v], v});
        }
      }
    }
    return dist;
  }

  // Distance in full units.
  std::optional<double> distance(std::size_t a, std::size_t b) const {
    long d = dijkstra(a)[b];
    if (d < 0) return std::nullopt;
    return static_cast<double>(d) / 2.0;
  }
};

inline ConedSpace build_coned_window(const ModelSpace& X, int parity, std::vector<ConedRegion> regions, long spoke,
                                     std::size_t budget = 5'000'000) {
  ConedSpace C;
  C.parity = parity;
  C.spoke = spoke;
  for (auto& r : regions) {
    if (r.sigma.parity() != parity) continue;
    ConedSpace::Piece p;
    p.sigma = r.sigma;
    std::sort(r.ybar.begin(), r.ybar.end(), ShortlexLess{});
    r.ybar.erase(std::unique(r.ybar.begin(), r.ybar.end()), r.ybar.end());
    p.ybar = std::move(r.ybar);
    for (std::size_t i = 0; i < p.ybar.size(); ++i) p.index.emplace(p.ybar[i], i);
    p.offset = C.base_count;
    C.base_count += p.ybar.size();
    C.pieces.push_back(std::move(p));
    if (C.base_count > budget) throw BudgetExceeded("coned window exceeds node budget of " + std::to_string(budget));
  }
  const BassSerre& bs = X.tree();
  std::vector<std::tuple<std::size_t, TreeVertex>> spokes;
  for (const auto& p : C.pieces) {
    for (std::size_t e = 0; e < X.graph().edges.size(); ++e) {
      for (int dir : {1, -1}) {
        const int ei = static_cast<int>(e);
        if (bs.depart(ei, dir) != p.sigma.vertex) continue;
        for (std::size_t i = 0; i < p.ybar.size(); ++i) spokes.emplace_back(p.offset + i, neighbor_through(bs, p.sigma, p.ybar[i], ei, dir));
      }
    }
  }
  std::vector<TreeVertex> tips;
  for (const auto& s : spokes) tips.push_back(std::get<1>(s));
  std::sort(tips.begin(), tips.end(), TreeVertexLess{});
  tips.erase(std::unique(tips.begin(), tips.end()), tips.end());
  C.apexes = std::move(tips);
  for (std::size_t i = 0; i < C.apexes.size(); ++i) C.apex_index.emplace(C.apexes[i], i);
  C.adj.assign(C.base_count + C.apexes.size(), {});
  auto link = [&](std::size_t a, std::size_t b, long w) {
    C.adj[a].push_back({b, w});
    C.adj[b].push_back({a, w});
  };
  for (const auto& p : C.pieces) {
    const int rank = X.graph().rank(p.sigma.vertex);
    for (std::size_t i = 0; i < p.ybar.size(); ++i)
      for (const Word& nb : tree_neighbors(p.ybar[i], rank)) {
        auto it = p.index.find(nb);
        if (it != p.index.end() && it->second > i) link(p.offset + i, p.offset + it->second, kTreeEdge);
      }
  }
  for (const auto& [id, tau] : spokes) link(id, C.base_count + C.apex_index.at(tau), spoke);
  return C;
}

// Coned-off piece: one piece, half-edges of length one half.
inline ConedSpace build_coned(const ModelSpace& X, const TreeVertex& sigma, std::vector<Word> window) {
  return build_coned_window(X, sigma.parity(), {{sigma, std::move(window)}}, kHalfEdge);
}

// ---- K-bounded decompositions ----------------------------------------------------------

struct PeripheralEdge {
  std::size_t from = 0, apex = 0, to = 0;
  long base_distance = -1;  // -1 when the endpoints lie in different pieces
};

struct KSegment {
  std::size_t first = 0, last = 0;  // path positions, inclusive
  long length = 0;                  // full units
};

struct KDecomposition {
  std::vector<std::size_t> path;
  std::vector<KSegment> segments;       // maximal K-bounded segments, trivial ones included
  std::vector<PeripheralEdge> deep;     // separating peripheral edges between segments
  long K = 0;
  long thick_norm = 0;
  long length_half = 0;
};

inline long peripheral_base_distance(const ConedSpace& C, std::size_t a, std::size_t b) {
  if (C.piece_of(a) != C.piece_of(b)) return -1;
  return tree_distance(C.ybar(a), C.ybar(b));
}

// A peripheral edge separates when its endpoints are in different pieces or more than K apart.
inline bool separates(long base_distance, long K) { return base_distance < 0 || base_distance > K; }

inline KDecomposition k_decompose(const ConedSpace& C, const std::vector<std::size_t>& path, long K) {
  if (path.empty() || C.is_apex(path.front()) || C.is_apex(path.back()))
    throw std::invalid_argument("path must start and end at base vertices");
  KDecomposition dec;
  dec.path = path;
  dec.K = K;
  KSegment cur{0, 0, 0};
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (C.is_apex(path[i])) continue;
    if (C.is_apex(path[i - 1])) {
      PeripheralEdge e{path[i - 2], path[i - 1], path[i], peripheral_base_distance(C, path[i - 2], path[i])};
      dec.length_half += 2 * C.spoke;
      if (separates(e.base_distance, K)) {
        cur.last = i - 2;
        dec.segments.push_back(cur);
        dec.deep.push_back(e);
        cur = KSegment{i, i, 0};
      } else {
        cur.length += C.spoke;
      }
    } else {
      dec.length_half += kTreeEdge;
      cur.length += 1;
    }
  }
  cur.last = path.size() - 1;
  dec.segments.push_back(cur);
  for (const auto& s : dec.segments) dec.thick_norm += cutoff(s.length, K);
  return dec;
}

// ---- thick distance --------------------------------------------------------------

enum class ThickMode { Exact, Sampled };

struct ThickResult {
  long value = 0;
  double coned_distance = 0.0;
  ThickMode mode = ThickMode::Exact;
  std::vector<std::size_t> path;  // a geodesic attaining the value
};

namespace detail {

struct GeodesicDag {
  std::vector<long> dx, dy;
  long total = 0;
  // Macro steps between base vertices along geodesics: (target, apex or npos).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> next;
  std::vector<std::size_t> order;  // base vertices on geodesics by dx
};

inline constexpr std::size_t kNoApex = static_cast<std::size_t>(-1);

inline GeodesicDag geodesic_dag(const ConedSpace& C, std::size_t x, std::size_t y) {
  GeodesicDag g;
  g.dx = C.dijkstra(x);
  g.dy = C.dijkstra(y);
  g.total = g.dx[y];
  g.next.assign(C.node_count(), {});
  auto on = [&](std::size_t z) { return g.dx[z] >= 0 && g.dy[z] >= 0 && g.dx[z] + g.dy[z] == g.total; };
  for (std::size_t u = 0; u < C.base_count; ++u) {
    if (!on(u)) continue;
    g.order.push_back(u);
    for (auto [v, w] : C.adj[u]) {
      if (!on(v) || g.dx[v] != g.dx[u] + w) continue;
      if (!C.is_apex(v)) {
        g.next[u].push_back({v, kNoApex});
        continue;
      }
      for (auto [q, w2] : C.adj[v])
        if (!C.is_apex(q) && on(q) && g.dx[q] == g.dx[v] + w2) g.next[u].push_back({q, v});
    }
  }
  std::sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) {
    return g.dx[a] != g.dx[b] ? g.dx[a] < g.dx[b] : a < b;
  });
  return g;
}

}  // namespace detail

// Max of |beta|_K over coned geodesics from x to y: every geodesic when the coned distance
// is at most cap, else `samples` random geodesics.
inline ThickResult thick_distance(const ConedSpace& C, std::size_t x, std::size_t y, long K, long cap = 24,
                                  std::size_t samples = 32, std::uint64_t seed = 0) {
  ThickResult res;
  detail::GeodesicDag g = detail::geodesic_dag(C, x, y);
  if (g.total < 0) throw std::runtime_error("points are not connected in the coned window");
  res.coned_distance = static_cast<double>(g.total) / 2.0;
  auto step_len = [&](std::size_t u, std::size_t v, std::size_t apex, long& seg) -> long {
    if (apex == detail::kNoApex) {
      seg += 1;
      return 0;
    }
    if (separates(peripheral_base_distance(C, u, v), K)) {
      long closed = cutoff(seg, K);
      seg = 0;
      return closed;
    }
    seg += C.spoke;
    return 0;
  };
  if (g.total <= 2 * cap) {
    res.mode = ThickMode::Exact;
    struct Entry {
      long best;
      std::size_t prev;
      long prev_seg;
      std::size_t apex;
    };
    std::vector<std::map<long, Entry>> st(C.node_count());
    st[x][0] = {0, x, -1, detail::kNoApex};
    for (std::size_t u : g.order) {
      for (const auto& [seg, e] : st[u]) {
        for (auto [v, apex] : g.next[u]) {
          long s = seg;
          long val = e.best + step_len(u, v, apex, s);
          auto it = st[v].find(s);
          if (it == st[v].end() || val > it->second.best) st[v][s] = {val, u, seg, apex};
        }
      }
    }
    long best = -1, best_seg = 0;
    for (const auto& [seg, e] : st[y]) {
      long v = e.best + cutoff(seg, K);
      if (v > best) {
        best = v;
        best_seg = seg;
      }
    }
    res.value = best;
    std::vector<std::size_t> rev{y};
    std::size_t u = y;
    long s = best_seg;
    while (u != x) {
      const Entry& e = st[u].at(s);
      if (e.apex != detail::kNoApex) rev.push_back(e.apex);
      rev.push_back(e.prev);
      u = e.prev;
      s = e.prev_seg;
    }
    res.path.assign(rev.rbegin(), rev.rend());
    return res;
  }
  res.mode = ThickMode::Sampled;
  std::mt19937_64 rng(seed);
  res.value = -1;
  for (std::size_t k = 0; k < samples; ++k) {
    std::vector<std::size_t> path{x};
    std::size_t u = x;
    while (u != y) {
      const auto& nx = g.next[u];
      auto [v, apex] = nx[rng() % nx.size()];
      if (apex != detail::kNoApex) path.push_back(apex);
      path.push_back(v);
      u = v;
    }
    KDecomposition dec = k_decompose(C, path, K);
    if (dec.thick_norm > res.value) {
      res.value = dec.thick_norm;
      res.path = std::move(path);
    }
  }
  return res;
}

// ---- formulas -------------------------------------------------------------------------

// Family restricted to the boundary classes: its lines are the peripheral cosets' lines.
inline QuasiLineFamily boundary_family(const QuasiLineFamily& fam) {
  QuasiLineFamily b = fam;
  b.classes = fam.boundary;
  return b;
}

inline QuasiLineFamily interior_family(const QuasiLineFamily& fam) {
  QuasiLineFamily b = fam;
  b.classes.clear();
  for (const Word& r : fam.classes)
    if (!fam.is_boundary(r)) b.classes.push_back(r);
  return b;
}

struct ConeoffRow {
  std::size_t id = 0;
  long lhs = 0;      // d_Ybar, glued distance, or d^K of the coned space
  long thick = 0;    // d^K term
  long lines = 0;    // cutoff sum over the relevant lines
  long d_tree = 0;
  ThickMode mode = ThickMode::Exact;
};

struct ConeoffFit {
  bool thick_lhs = false;  // d^K is the left side rather than a right-side term
  bool tree_term = false;  // d_T is part of the right side
  double N = 1.0;
  double L = 0.0;
  double N_with_tree = 1.0;  // envelope with d_T added to the right side
  std::size_t lower_violations = 0;
  std::size_t sampled = 0;
  std::size_t excluded = 0;
  std::vector<ConeoffRow> rows;

  long rhs(const ConeoffRow& r) const { return (thick_lhs ? 0 : r.thick) + r.lines + (tree_term ? r.d_tree : 0); }
};

inline void finish_coneoff_fit(ConeoffFit& fit) {
  fit.N = fit.N_with_tree = 1.0;
  fit.L = 0.0;
  fit.sampled = 0;
  for (const auto& r : fit.rows) {
    fit.N = std::max(fit.N, lambda_envelope(r.lhs, fit.rhs(r)));
    long with_tree = fit.rhs(r) + (fit.tree_term ? 0 : r.d_tree);
    fit.N_with_tree = std::max(fit.N_with_tree, lambda_envelope(r.lhs, with_tree));
    fit.sampled += r.mode == ThickMode::Sampled;
  }
  for (const auto& r : fit.rows)
    fit.L = std::max(fit.L, static_cast<double>(fit.rhs(r)) / fit.N - static_cast<double>(r.lhs));
  fit.lower_violations = 0;
  for (const auto& r : fit.rows)
    if (static_cast<double>(fit.rhs(r)) / fit.N - fit.L > static_cast<double>(r.lhs) + 1e-9) ++fit.lower_violations;
}

// Piece formula: d_Ybar(x, y) against d^K of the coned piece plus the boundary-line cutoff sum.
// The window is the hull of each pair thickened by pad.
inline ConeoffFit piece_coneoff_fit(const ModelSpace& X, const TreeVertex& sigma, const QuasiLineFamily& fam,
                                    const std::vector<std::pair<Word, Word>>& pairs, long K, int pad,
                                    long cap = 24, std::uint64_t seed = 0) {
  ConeoffFit fit;
  QuasiLineFamily periph = boundary_family(fam);
  const int rank = X.graph().rank(sigma.vertex);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [x, y] = pairs[i];
    ConedSpace C = build_coned(X, sigma, ModelSpace::hull({x, y}, rank, pad));
    ThickResult t = thick_distance(C, *C.node(sigma, x), *C.node(sigma, y), K, cap, 32, seed + i);
    fit.rows.push_back({i, tree_distance(x, y), t.value, cutoff_sum(periph, x, y, K), 0, t.mode});
  }
  finish_coneoff_fit(fit);
  return fit;
}

// Multicone space along the tree path between the pieces of x and y (both of the given
// parity): in every piece the hull of the endpoints and of the bridge points between the
// neighbouring plane lines, thickened by pad.
inline ConedSpace coned_corridor(const ModelSpace& X, int parity, const XPoint& x0, const XPoint& y0, int pad,
                                 long r = kDefaultConeRadius) {
  XPoint x = X.canonical(x0), y = X.canonical(y0);
  if (x.piece.parity() != parity || y.piece.parity() != parity)
    throw WrongPiece("corridor endpoints must lie in pieces of the given parity");
  const auto path = BassSerre::geodesic(x.piece, y.piece, X.tree());
  const std::size_t n = path.size() - 1;
  std::vector<ConedRegion> regions;
  for (std::size_t i = 0; i <= n; i += 2) {
    const TreeVertex& s = path[i];
    std::vector<Word> keys;
    if (i == 0) keys.push_back(x.ybar);
    if (i == n) keys.push_back(y.ybar);
    StripEnd before = i == 0 ? StripEnd{x} : StripEnd{path[i - 1]};
    StripEnd after = i == n ? StripEnd{y} : StripEnd{path[i + 1]};
    if (i > 0) keys.push_back(axis_vertex(X.plane_line(s, path[i - 1]), X.strip_meet_param(s, after, path[i - 1])));
    if (i < n) keys.push_back(axis_vertex(X.plane_line(s, path[i + 1]), X.strip_meet_param(s, before, path[i + 1])));
    regions.push_back({s, ModelSpace::hull(keys, X.graph().rank(s.vertex), pad)});
  }
  return build_coned_window(X, parity, std::move(regions), 2 * r);
}

// Binding-line cutoff sum and piece entry/exit points along a geodesic of the glued space.
struct GluedTerms {
  long distance = 0;  // length of the glued geodesic
  long binding_sum = 0;
  long binding_crossed = 0;  // binding lines with a nonzero cutoff term
  bool ok = false;
};

inline GluedTerms glued_binding_terms(const ModelSpace& X, int parity, const XPoint& x, const XPoint& y, long K,
                                      long radius) {
  GluedTerms out;
  GluedPoint a = phi_part(X, x, parity), b = phi_part(X, y, parity);
  GluedSpace G = glued_corridor(X, parity, a, b, radius);
  auto s = G.node(a), t = G.node(b);
  if (!s || !t) return out;
  auto path = G.shortest_path(*s, *t);
  if (path.empty()) return out;
  out.ok = true;
  out.distance = static_cast<long>(path.size()) - 1;
  std::size_t k = 0;
  while (k < path.size()) {
    GluedPoint first = G.point(path[k]);
    std::size_t e = k;
    while (e + 1 < path.size() && G.point(path[e + 1]).sigma == first.sigma) ++e;
    if (first.binding) {
      long c = cutoff(std::labs(G.point(path[e]).t - first.t), K);
      out.binding_sum += c;
      out.binding_crossed += c > 0;
    }
    k = e + 1;
  }
  return out;
}

// Global formula: distance in the glued space of the given parity against d^K of the multicone space plus the binding-line sum.
inline ConeoffFit global_coneoff_fit(const ModelSpace& X, int parity, const std::vector<std::pair<XPoint, XPoint>>& pairs,
                                     long K, int pad, long glued_radius = 8, long cap = 24, std::uint64_t seed = 0) {
  ConeoffFit fit;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [x, y] = pairs[i];
    XPoint cx = X.canonical(x), cy = X.canonical(y);
    if (cx.piece.parity() != parity || cy.piece.parity() != parity) {
      ++fit.excluded;
      continue;
    }
    ConedSpace C = coned_corridor(X, parity, cx, cy, pad);
    ThickResult t = thick_distance(C, *C.node(cx.piece, cx.ybar), *C.node(cy.piece, cy.ybar), K, cap, 32, seed + i);
    GluedTerms g = glued_binding_terms(X, parity, cx, cy, K, glued_radius);
    if (!g.ok) {
      ++fit.excluded;
      continue;
    }
    fit.rows.push_back({i, g.distance, t.value, g.binding_sum, BassSerre::distance(cx.piece, cy.piece), t.mode});
  }
  finish_coneoff_fit(fit);
  return fit;
}

// Coned-level formula: d^K against the cutoff sum over interior family lines along the
// K-bounded segments of the maximizing geodesic, plus d_T.
inline ConeoffFit coned_level_fit(const ModelSpace& X, int parity, const std::vector<QuasiLineFamily>& fams,
                                  const std::vector<std::pair<XPoint, XPoint>>& pairs, long K, int pad, long cap = 24,
                                  std::uint64_t seed = 0) {
  ConeoffFit fit;
  fit.thick_lhs = fit.tree_term = true;
  std::vector<QuasiLineFamily> inner;
  for (const auto& f : fams) inner.push_back(interior_family(f));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    XPoint cx = X.canonical(pairs[i].first), cy = X.canonical(pairs[i].second);
    if (cx.piece.parity() != parity || cy.piece.parity() != parity) {
      ++fit.excluded;
      continue;
    }
    ConedSpace C = coned_corridor(X, parity, cx, cy, pad);
    ThickResult t = thick_distance(C, *C.node(cx.piece, cx.ybar), *C.node(cy.piece, cy.ybar), K, cap, 32, seed + i);
    KDecomposition dec = k_decompose(C, t.path, K);
    long lines = 0;
    for (const KSegment& s : dec.segments) {
      std::size_t a = t.path[s.first], b = t.path[s.last];
      const auto& fam = inner.at(static_cast<std::size_t>(C.pieces[C.piece_of(a)].sigma.vertex));
      lines += cutoff_sum(fam, C.ybar(a), C.ybar(b), K);
    }
    fit.rows.push_back({i, t.value, t.value, lines, BassSerre::distance(cx.piece, cy.piece), t.mode});
  }
  finish_coneoff_fit(fit);
  return fit;
}

// ---- quasi-tree pipeline --------------------------------------------------------------

struct PipelineRow {
  std::size_t id = 0;
  long d_x = 0;  // glued distance
  long thick = 0;
  long d_c = 0;
  long image() const { return thick + d_c; }
};

struct PipelineReport {
  double lambda = 1.0;
  std::size_t excluded = 0;
  std::vector<PipelineRow> rows;
};

// Quasi-tree distance between the binding-line images: each binding line crossed with a
// nonzero cutoff term is travelled along and entered by one bridge edge.
inline long binding_quasitree_distance(const GluedTerms& g) {
  return g.binding_sum + std::max(0L, g.binding_crossed - 1);
}

inline PipelineReport qt_pipeline_check(const ModelSpace& X, int parity, const std::vector<std::pair<XPoint, XPoint>>& pairs,
                                        long K, int pad, long glued_radius = 8, long cap = 24, std::uint64_t seed = 0) {
  PipelineReport rep;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    XPoint cx = X.canonical(pairs[i].first), cy = X.canonical(pairs[i].second);
    if (cx.piece.parity() != parity || cy.piece.parity() != parity) {
      ++rep.excluded;
      continue;
    }
    ConedSpace C = coned_corridor(X, parity, cx, cy, pad);
    ThickResult t = thick_distance(C, *C.node(cx.piece, cx.ybar), *C.node(cy.piece, cy.ybar), K, cap, 32, seed + i);
    GluedTerms g = glued_binding_terms(X, parity, cx, cy, K, glued_radius);
    if (!g.ok) {
      ++rep.excluded;
      continue;
    }
    PipelineRow row{i, g.distance, t.value, binding_quasitree_distance(g)};
    rep.rows.push_back(row);
    rep.lambda = std::max(rep.lambda, lambda_envelope(row.d_x, row.image()));
  }
  return rep;
}

// ---- cross-piece projections -------------------------------------------------------------

// Diameter, in the coned metric, of the nearest-point projection of the window part of line
// alpha (in piece sa) onto the window part of line beta (in piece sb).
inline double cross_piece_projection(const ConedSpace& C, const TreeVertex& sa, const Axis& alpha, const TreeVertex& sb,
                                     const Axis& beta, long span) {
  auto points = [&](const TreeVertex& s, const Axis& g) {
    std::vector<std::size_t> out;
    long c = project_to_axis(Word{}, g).param;
    for (long p = c - span; p <= c + span; ++p)
      if (auto id = C.node(s, axis_vertex(g, p))) out.push_back(*id);
    return out;
  };
  std::vector<std::size_t> A = points(sa, alpha), B = points(sb, beta);
  if (A.empty() || B.empty()) throw std::invalid_argument("lines miss the coned window");
  std::vector<std::size_t> hits;
  for (std::size_t a : A) {
    auto d = C.dijkstra(a);
    long best = -1;
    for (std::size_t b : B)
      if (d[b] >= 0 && (best < 0 || d[b] < best)) best = d[b];
    for (std::size_t b : B)
      if (d[b] == best) hits.push_back(b);
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  long diam = 0;
  for (std::size_t h : hits) {
    auto d = C.dijkstra(h);
    for (std::size_t k : hits) diam = std::max(diam, d[k]);
  }
  return static_cast<double>(diam) / 2.0;
}

}  // namespace ckaw

#endif
