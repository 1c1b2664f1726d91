#ifndef CKAW_MODEL_SPACE_HPP
#define CKAW_MODEL_SPACE_HPP

#include <algorithm>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "ckaw/bass_serre.hpp"

namespace ckaw {

// Point of X: piece Y_sigma = Ybar_v x Z in the coordinates of sigma's canonical path.
struct XPoint {
  TreeVertex piece;
  Word ybar;
  long h = 0;

  friend bool operator==(const XPoint&, const XPoint&) = default;
};

class WrongPiece : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotAdjacent : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tree distance between A(s) and B(t) for two lines A, B of a Cayley tree.
// A and B share the A-parameter interval [p1, p2] (p1 == p2 and width > 0 when disjoint);
// along it the B-parameter is q1 + eps * (s - p1).
struct LinePair {
  long p1 = 0, p2 = 0, q1 = 0;
  int eps = 1;
  long width = 0;

  long operator()(long s, long t) const {
    long c = std::clamp(s, p1, p2);
    return std::labs(s - c) + width + std::labs(t - (q1 + eps * (c - p1)));
  }
};

inline LinePair line_pair(const Axis& a, const Axis& b) {
  Bridge br = bridge(a, b);
  LinePair lp;
  lp.p1 = br.param_a;
  lp.q1 = br.param_b;
  lp.width = br.width;
  lp.p2 = br.param_a + (br.width == 0 ? overlap_length(a, b) : 0);
  if (lp.p2 > lp.p1) lp.eps = static_cast<int>(axis_param(b, axis_vertex(a, lp.p1 + 1)) - lp.q1);
  return lp;
}

// Affine flip between plane coordinates of adjacent pieces: s' = a*t + b, t' = c*s + d.
struct PlaneMap {
  long a = 1, b = 0, c = 1, d = 0;

  std::pair<long, long> operator()(long s, long t) const { return {a * t + b, c * s + d}; }
};

// A strip end inside a piece: either the plane towards a neighbouring tree vertex or a point.
using StripEnd = std::variant<TreeVertex, XPoint>;

struct Strip {
  TreeVertex piece;
  Axis line_a;               // unused when the strip starts at a point
  std::optional<Word> point; // set for strip_from_point
  Axis line_b;
  Bridge bridge;
};

// Finite subgraph of X: for each piece a set of Ybar vertices times a fiber interval, with
// plane identifications between adjacent pieces as zero-length twin edges.
class Window {
 public:
  struct Piece {
    TreeVertex sigma;
    std::vector<Word> ybar;
    std::unordered_map<Word, int, WordHash> index;
    std::vector<std::vector<int>> adj;
    long h_lo = 0, h_hi = 0;
    std::size_t offset = 0;

    std::size_t fiber_len() const { return static_cast<std::size_t>(h_hi - h_lo + 1); }
    std::size_t size() const { return ybar.size() * fiber_len(); }
  };

  std::vector<Piece> pieces;
  std::unordered_map<std::size_t, std::vector<std::size_t>> twins;
  std::size_t node_count = 0;

  struct Node {
    std::size_t piece;
    int y;
    long h;
  };

  Node decode(std::size_t id) const {
    auto it = std::upper_bound(pieces.begin(), pieces.end(), id,
                               [](std::size_t v, const Piece& p) { return v < p.offset; });
    std::size_t pi = static_cast<std::size_t>(it - pieces.begin()) - 1;
    const Piece& p = pieces[pi];
    std::size_t local = id - p.offset;
    return {pi, static_cast<int>(local / p.fiber_len()), p.h_lo + static_cast<long>(local % p.fiber_len())};
  }

  std::optional<std::size_t> encode(std::size_t pi, const Word& y, long h) const {
    const Piece& p = pieces[pi];
    if (h < p.h_lo || h > p.h_hi) return std::nullopt;
    auto it = p.index.find(y);
    if (it == p.index.end()) return std::nullopt;
    return p.offset + static_cast<std::size_t>(it->second) * p.fiber_len() + static_cast<std::size_t>(h - p.h_lo);
  }

  // 0-1 BFS from src; -1 marks unreachable nodes. `parent` is filled when non-null.
  std::vector<int> bfs(std::size_t src, std::vector<std::size_t>* parent = nullptr) const {
    std::vector<int> dist(node_count, -1);
    if (parent) parent->assign(node_count, std::numeric_limits<std::size_t>::max());
    std::deque<std::size_t> dq;
    dist[src] = 0;
    dq.push_back(src);
    std::vector<char> done(node_count, 0);
    while (!dq.empty()) {
      std::size_t u = dq.front();
      dq.pop_front();
      if (done[u]) continue;
      done[u] = 1;
      auto relax = [&](std::size_t v, int w) {
        if (dist[v] < 0 || dist[u] + w < dist[v]) {
          dist[v] = dist[u] + w;
          if (parent) (*parent)[v] = u;
          if (w == 0) dq.push_front(v); else dq.push_back(v);
        }
      };
      if (auto it = twins.find(u); it != twins.end()) {
        for (std::size_t v : it->second) relax(v, 0);
      }
      Node n = decode(u);
      const Piece& p = pieces[n.piece];
      const std::size_t fl = p.fiber_len();
      const std::size_t hoff = static_cast<std::size_t>(n.h - p.h_lo);
      for (int y2 : p.adj[static_cast<std::size_t>(n.y)]) relax(p.offset + static_cast<std::size_t>(y2) * fl + hoff, 1);
      if (n.h > p.h_lo) relax(u - 1, 1);
      if (n.h < p.h_hi) relax(u + 1, 1);
    }
    return dist;
  }
};

class ModelSpace {
 public:
  explicit ModelSpace(const AdmissibleGraph& g) : bs_(g) {}

  const BassSerre& tree() const { return bs_; }
  const AdmissibleGraph& graph() const { return bs_.graph(); }

  static bool is_child(const TreeVertex& parent, const TreeVertex& child) {
    return child.steps.size() == parent.steps.size() + 1 &&
           std::equal(parent.steps.begin(), parent.steps.end(), child.steps.begin());
  }

  // Boundary line in sigma's coordinates of the plane shared with the adjacent vertex nbr.
  Axis plane_line(const TreeVertex& sigma, const TreeVertex& nbr) const {
    Axis ax;
    if (is_child(sigma, nbr)) {
      const Step& st = nbr.steps.back();
      ax.word.root = bs_.depart_root(st.edge, st.dir);
      ax.base = st.coset;
    } else if (is_child(nbr, sigma)) {
      const Step& st = sigma.steps.back();
      ax.word.root = bs_.arrive_root(st.edge, st.dir);
    } else {
      throw NotAdjacent("tree vertices are not adjacent");
    }
    return ax;
  }

  // Plane coordinates (s along plane_line(sigma, nbr), t fiber) to those of nbr.
  PlaneMap plane_map(const TreeVertex& sigma, const TreeVertex& nbr) const {
    Side side;
    int edge;
    if (is_child(sigma, nbr)) {
      const Step& st = nbr.steps.back();
      edge = st.edge;
      side = st.dir > 0 ? Side::From : Side::To;
    } else if (is_child(nbr, sigma)) {
      const Step& st = sigma.steps.back();
      edge = st.edge;
      side = st.dir > 0 ? Side::To : Side::From;
    } else {
      throw NotAdjacent("tree vertices are not adjacent");
    }
    PlaneCoord o = flip_transfer(graph(), {edge, 0, 0}, side);
    PlaneCoord ds = flip_transfer(graph(), {edge, 1, 0}, side);
    PlaneCoord dt = flip_transfer(graph(), {edge, 0, 1}, side);
    return PlaneMap{dt.s - o.s, o.s, ds.t - o.t, o.t};
  }

  // Coordinates of a point of Y_sigma on the plane towards nbr, expressed in nbr.
  std::optional<std::pair<Word, long>> across(const TreeVertex& sigma, const Word& y, long h,
                                              const TreeVertex& nbr) const {
    Axis line = plane_line(sigma, nbr);
    AxisProjection p = project_to_axis(y, line);
    if (p.distance != 0) return std::nullopt;
    auto [s2, t2] = plane_map(sigma, nbr)(p.param, h);
    return std::make_pair(axis_vertex(plane_line(nbr, sigma), s2), t2);
  }

  XPoint canonical(XPoint x) const {
    while (!x.piece.steps.empty()) {
      TreeVertex parent = bs_.truncate(x.piece, x.piece.steps.size() - 1);
      auto up = across(x.piece, x.ybar, x.h, parent);
      if (!up) break;
      x = XPoint{std::move(parent), std::move(up->first), up->second};
    }
    return x;
  }

  TreeVertex rho(const XPoint& x) const { return canonical(x).piece; }

  // Coordinates of x in the piece tau, if x lies in Y_tau.
  std::optional<std::pair<Word, long>> coords_in(const XPoint& x, const TreeVertex& tau) const {
    std::vector<TreeVertex> path = BassSerre::geodesic(x.piece, tau, bs_);
    Word y = x.ybar;
    long h = x.h;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      auto nx = across(path[i], y, h, path[i + 1]);
      if (!nx) return std::nullopt;
      y = std::move(nx->first);
      h = nx->second;
    }
    return std::make_pair(y, h);
  }

  XPoint act(const GroupElement& g, const XPoint& x) const {
    auto raw = bs_.syllables(g);
    auto rp = bs_.syllables(x.piece);
    raw.insert(raw.end(), rp.begin(), rp.end());
    GroupElement gp = bs_.normalize(raw);
    return canonical(XPoint{bs_.vertex_of(gp), multiply(gp.tail.word, x.ybar), x.h + gp.tail.fiber});
  }

  static long l1(const Word& y1, long h1, const Word& y2, long h2) {
    return tree_distance(y1, y2) + std::labs(h1 - h2);
  }

  // L1 distance of two points sharing a piece.
  long piece_distance(const XPoint& x, const XPoint& y) const {
    XPoint cx = canonical(x), cy = canonical(y);
    if (cx.piece == cy.piece) return l1(cx.ybar, cx.h, cy.ybar, cy.h);
    if (auto c = coords_in(cy, cx.piece)) return l1(cx.ybar, cx.h, c->first, c->second);
    if (auto c = coords_in(cx, cy.piece)) return l1(c->first, c->second, cy.ybar, cy.h);
    throw WrongPiece("points do not share a piece");
  }

  Strip strip(const TreeVertex& sigma, const TreeVertex& n1, const TreeVertex& n2) const {
    Strip s;
    s.piece = sigma;
    s.line_a = plane_line(sigma, n1);
    s.line_b = plane_line(sigma, n2);
    s.bridge = bridge(s.line_a, s.line_b);
    return s;
  }

  Strip strip_from_point(const XPoint& x, const TreeVertex& sigma, const TreeVertex& nbr) const {
    auto c = coords_in(x, sigma);
    if (!c) throw WrongPiece("point is not in the given piece");
    Strip s;
    s.piece = sigma;
    s.point = c->first;
    s.line_b = plane_line(sigma, nbr);
    AxisProjection p = project_to_axis(c->first, s.line_b);
    s.bridge = Bridge{c->first, p.point, 0, p.param, p.distance};
    return s;
  }

  // Parameter on plane_line(a, b) where the strip from `from` meets it, in a's coordinates.
  long strip_meet_param(const TreeVertex& a, const StripEnd& from, const TreeVertex& b) const {
    if (const auto* v = std::get_if<TreeVertex>(&from)) return strip(a, *v, b).bridge.param_b;
    return strip_from_point(std::get<XPoint>(from), a, b).bridge.param_b;
  }

  // Corner on the plane between a and b, in a's plane coordinates (s, t).
  std::pair<long, long> corner_coords(const StripEnd& before, const TreeVertex& a, const TreeVertex& b,
                                      const StripEnd& after) const {
    long s = strip_meet_param(a, before, b);
    long q = strip_meet_param(b, after, a);
    // The fiber in a's coordinates is fixed by b's line parameter alone.
    long t = plane_map(b, a)(q, 0).second;
    return {s, t};
  }

  XPoint corner_point(const StripEnd& before, const TreeVertex& a, const TreeVertex& b,
                      const StripEnd& after) const {
    auto [s, t] = corner_coords(before, a, b, after);
    return canonical(XPoint{a, axis_vertex(plane_line(a, b), s), t});
  }

  // Exact distance in X by dynamic programming over plane coordinates along the tree geodesic.
  long distance(const XPoint& x0, const XPoint& y0) const {
    XPoint x = canonical(x0), y = canonical(y0);
    std::vector<TreeVertex> path = BassSerre::geodesic(x.piece, y.piece, bs_);
    const std::size_t n = path.size() - 1;
    if (n == 0) return l1(x.ybar, x.h, y.ybar, y.h);
    std::vector<Axis> left(n + 1), right(n + 1);
    std::vector<PlaneMap> maps(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
      left[i] = plane_line(path[i - 1], path[i]);
      right[i] = plane_line(path[i], path[i - 1]);
      maps[i] = plane_map(path[i - 1], path[i]);
    }
    std::vector<LinePair> pairs(n + 1);
    for (std::size_t i = 1; i < n; ++i) pairs[i] = line_pair(right[i], left[i + 1]);
    AxisProjection px = project_to_axis(x.ybar, left[1]);
    AxisProjection py = project_to_axis(y.ybar, right[n]);

    long bound = std::max({std::labs(px.param), std::labs(py.param), std::labs(x.h), std::labs(y.h)});
    long slack = 4;
    for (std::size_t i = 1; i <= n; ++i) slack += std::labs(maps[i].b) + std::labs(maps[i].d);
    for (std::size_t i = 1; i < n; ++i) {
      bound = std::max({bound, std::labs(pairs[i].p1), std::labs(pairs[i].p2), std::labs(pairs[i].q1)});
      slack += pairs[i].p2 - pairs[i].p1;
    }
    const long B = bound + slack;
    const std::size_t W = static_cast<std::size_t>(2 * B + 1);
    const long INF = std::numeric_limits<long>::max() / 4;

    long total = 0;
    // Chain 0 starts with the line parameter on plane 1, chain 1 with the fiber.
    for (int chain = 0; chain < 2; ++chain) {
      bool ytype = chain == 0;  // type of the current variable in the left piece's coordinates
      std::vector<long> cost(W);
      for (std::size_t k = 0; k < W; ++k) {
        long v = static_cast<long>(k) - B;
        cost[k] = ytype ? std::labs(v - px.param) + px.distance : std::labs(v - x.h);
      }
      for (std::size_t i = 1; i < n; ++i) {
        // Map into path[i] coordinates: the type flips.
        std::vector<long> next(W, INF);
        for (std::size_t k = 0; k < W; ++k) {
          if (cost[k] >= INF) continue;
          long v = static_cast<long>(k) - B;
          long m = ytype ? maps[i](v, 0).second : maps[i](0, v).first;
          for (std::size_t j = 0; j < W; ++j) {
            long w = static_cast<long>(j) - B;
            long c = ytype ? std::labs(m - w) : pairs[i](m, w);
            next[j] = std::min(next[j], cost[k] + c);
          }
        }
        cost = std::move(next);
        ytype = !ytype;
      }
      long best = INF;
      for (std::size_t k = 0; k < W; ++k) {
        if (cost[k] >= INF) continue;
        long v = static_cast<long>(k) - B;
        long m = ytype ? maps[n](v, 0).second : maps[n](0, v).first;
        long c = ytype ? std::labs(m - y.h) : std::labs(m - py.param) + py.distance;
        best = std::min(best, cost[k] + c);
      }
      total += best;
    }
    return total;
  }

  // ---- windows -------------------------------------------------------------

  struct PieceRegion {
    TreeVertex sigma;
    std::vector<Word> ybar;
    long h_lo = 0, h_hi = 0;
  };

  Window build_window(std::vector<PieceRegion> regions, std::size_t budget) const {
    Window w;
    std::size_t total = 0;
    for (auto& r : regions) {
      Window::Piece p;
      p.sigma = r.sigma;
      std::sort(r.ybar.begin(), r.ybar.end(), ShortlexLess{});
      r.ybar.erase(std::unique(r.ybar.begin(), r.ybar.end()), r.ybar.end());
      p.ybar = std::move(r.ybar);
      p.h_lo = r.h_lo;
      p.h_hi = r.h_hi;
      for (std::size_t i = 0; i < p.ybar.size(); ++i) p.index.emplace(p.ybar[i], static_cast<int>(i));
      const int rank = graph().rank(p.sigma.vertex);
      p.adj.resize(p.ybar.size());
      for (std::size_t i = 0; i < p.ybar.size(); ++i) {
        for (const Word& nb : tree_neighbors(p.ybar[i], rank)) {
          auto it = p.index.find(nb);
          if (it != p.index.end()) p.adj[i].push_back(it->second);
        }
      }
      p.offset = total;
      total += p.size();
      if (total > budget) throw BudgetExceeded("window exceeds node budget of " + std::to_string(budget));
      w.pieces.push_back(std::move(p));
    }
    w.node_count = total;
    for (std::size_t i = 0; i < w.pieces.size(); ++i) {
      for (std::size_t j = 0; j < w.pieces.size(); ++j) {
        if (!is_child(w.pieces[i].sigma, w.pieces[j].sigma)) continue;
        // Plane points of the child j, matched into the parent i.
        const auto& P = w.pieces[i];
        const auto& C = w.pieces[j];
        Axis cl = plane_line(C.sigma, P.sigma);
        Axis pl = plane_line(P.sigma, C.sigma);
        PlaneMap m = plane_map(C.sigma, P.sigma);
        for (std::size_t yi = 0; yi < C.ybar.size(); ++yi) {
          AxisProjection pr = project_to_axis(C.ybar[yi], cl);
          if (pr.distance != 0) continue;
          for (long h = C.h_lo; h <= C.h_hi; ++h) {
            auto [s2, t2] = m(pr.param, h);
            auto a = w.encode(i, axis_vertex(pl, s2), t2);
            if (!a) continue;
            std::size_t b = C.offset + yi * C.fiber_len() + static_cast<std::size_t>(h - C.h_lo);
            w.twins[*a].push_back(b);
            w.twins[b].push_back(*a);
          }
        }
      }
    }
    return w;
  }

  std::optional<std::size_t> locate(const Window& w, const XPoint& x) const {
    for (std::size_t i = 0; i < w.pieces.size(); ++i) {
      auto c = coords_in(x, w.pieces[i].sigma);
      if (!c) continue;
      if (auto id = w.encode(i, c->first, c->second)) return id;
    }
    return std::nullopt;
  }

  // Convex hull in the Cayley tree of the given vertices, thickened by pad.
  static std::vector<Word> hull(const std::vector<Word>& pts, int rank, int pad) {
    std::unordered_set<Word, WordHash> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i; j < pts.size(); ++j) {
        for (Word& v : tree_geodesic(pts[i], pts[j])) out.insert(std::move(v));
      }
    }
    std::vector<Word> frontier(out.begin(), out.end());
    for (int r = 0; r < pad; ++r) {
      std::vector<Word> next;
      for (const Word& v : frontier) {
        for (Word& nb : tree_neighbors(v, rank)) {
          if (out.insert(nb).second) next.push_back(std::move(nb));
        }
      }
      frontier = std::move(next);
    }
    return std::vector<Word>(out.begin(), out.end());
  }

  // Window along the tree geodesic from rho(x) to rho(y): in each piece the hull of the
  // endpoints and of the two plane lines within `radius` of their bridge points, thickened
  // by one, times the fiber range of the relevant coordinates widened by `radius`.
  Window corridor(const XPoint& x0, const XPoint& y0, long radius, std::size_t budget = 20'000'000) const {
    XPoint x = canonical(x0), y = canonical(y0);
    std::vector<TreeVertex> path = BassSerre::geodesic(x.piece, y.piece, bs_);
    const std::size_t n = path.size() - 1;
    std::vector<PieceRegion> regions;
    for (std::size_t i = 0; i <= n; ++i) {
      const TreeVertex& s = path[i];
      std::vector<Word> keys;
      std::vector<long> fibers;
      StripEnd before = i == 0 ? StripEnd{x} : StripEnd{path[i - 1]};
      StripEnd after = i == n ? StripEnd{y} : StripEnd{path[i + 1]};
      if (i == 0) {
        keys.push_back(x.ybar);
        fibers.push_back(x.h);
      }
      if (i == n) {
        keys.push_back(y.ybar);
        fibers.push_back(y.h);
      }
      auto add_line = [&](const TreeVertex& nbr, const StripEnd& other) {
        Axis line = plane_line(s, nbr);
        long c = strip_meet_param(s, other, nbr);
        keys.push_back(axis_vertex(line, c - radius));
        keys.push_back(axis_vertex(line, c + radius));
      };
      if (i > 0) add_line(path[i - 1], after);
      if (i < n) add_line(path[i + 1], before);
      // Corner fibers in s's coordinates.
      if (i > 0) {
        StripEnd bb = i >= 2 ? StripEnd{path[i - 2]} : StripEnd{x};
        auto [cs, ct] = corner_coords(bb, path[i - 1], s, after);
        fibers.push_back(plane_map(path[i - 1], s)(cs, ct).second);
      }
      if (i < n) {
        StripEnd aa = i + 2 <= n ? StripEnd{path[i + 2]} : StripEnd{y};
        fibers.push_back(corner_coords(before, s, path[i + 1], aa).second);
      }
      auto [lo, hi] = std::minmax_element(fibers.begin(), fibers.end());
      regions.push_back({s, hull(keys, graph().rank(s.vertex), 1), *lo - radius, *hi + radius});
    }
    return build_window(std::move(regions), budget);
  }

  // Shortest-path distance in the corridor window of the given radius; nullopt if y is not
  // reachable inside it.
  std::optional<long> oracle_distance(const XPoint& x, const XPoint& y, long radius,
                                      std::size_t budget = 20'000'000) const {
    Window w = corridor(x, y, radius, budget);
    return window_distance(w, x, y);
  }

  std::optional<long> window_distance(const Window& w, const XPoint& x, const XPoint& y) const {
    auto a = locate(w, x), b = locate(w, y);
    if (!a || !b) return std::nullopt;
    auto d = w.bfs(*a);
    if (d[*b] < 0) return std::nullopt;
    return d[*b];
  }

  // Window of all pieces within tree radius `tree_radius` of sigma (cap coset representatives
  // per edge end), each a Ybar ball of radius `ybar_radius` around the identity times
  // [-fiber_radius, fiber_radius].
  Window ball_window(const TreeVertex& sigma, int tree_radius, std::size_t cap, int ybar_radius,
                     long fiber_radius, std::size_t budget = 20'000'000) const {
    std::vector<PieceRegion> regions;
    for (const TreeVertex& t : bs_.tree_ball(sigma, tree_radius, cap)) {
      regions.push_back({t, ball(graph().rank(t.vertex), ybar_radius), -fiber_radius, fiber_radius});
    }
    return build_window(std::move(regions), budget);
  }

  XPoint window_point(const Window& w, std::size_t id) const {
    Window::Node n = w.decode(id);
    const auto& p = w.pieces[n.piece];
    return canonical(XPoint{p.sigma, p.ybar[static_cast<std::size_t>(n.y)], n.h});
  }

  // CSV edge list "u,v,weight" with points serialized; twin edges have weight 0.
  void export_csv(const Window& w, std::ostream& os) const {
    os << "u,v,weight\n";
    for (std::size_t u = 0; u < w.node_count; ++u) {
      Window::Node n = w.decode(u);
      const auto& p = w.pieces[n.piece];
      std::string su = format(XPoint{p.sigma, p.ybar[static_cast<std::size_t>(n.y)], n.h});
      for (int y2 : p.adj[static_cast<std::size_t>(n.y)]) {
        if (y2 < n.y) continue;
        os << '"' << su << "\",\"" << format(XPoint{p.sigma, p.ybar[static_cast<std::size_t>(y2)], n.h}) << "\",1\n";
      }
      if (n.h < p.h_hi) {
        os << '"' << su << "\",\"" << format(XPoint{p.sigma, p.ybar[static_cast<std::size_t>(n.y)], n.h + 1}) << "\",1\n";
      }
      if (auto it = w.twins.find(u); it != w.twins.end()) {
        for (std::size_t v : it->second) {
          if (v < u) continue;
          Window::Node m = w.decode(v);
          const auto& q = w.pieces[m.piece];
          os << '"' << su << "\",\"" << format(XPoint{q.sigma, q.ybar[static_cast<std::size_t>(m.y)], m.h}) << "\",0\n";
        }
      }
    }
  }

  // "coset | word | h"
  std::string format(const XPoint& x) const {
    return bs_.format(x.piece) + " | " + format_word(x.ybar, graph().alphabet(x.piece.vertex)) + " | " +
           std::to_string(x.h);
  }

  XPoint parse_point(std::string_view text) const {
    std::string s(text);
    auto p1 = s.find('|');
    auto p2 = p1 == std::string::npos ? p1 : s.find('|', p1 + 1);
    if (p2 == std::string::npos) throw MalformedInput("point needs 'coset | word | h'");
    auto trim = [](std::string v) {
      auto b = v.find_first_not_of(' ');
      auto e = v.find_last_not_of(' ');
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    XPoint x;
    x.piece = bs_.parse_vertex(trim(s.substr(0, p1)));
    x.ybar = parse_word(trim(s.substr(p1 + 1, p2 - p1 - 1)), graph().alphabet(x.piece.vertex));
    try {
      x.h = std::stol(trim(s.substr(p2 + 1)));
    } catch (const std::logic_error&) {
      throw MalformedInput("bad fiber in point '" + s + "'");
    }
    return canonical(x);
  }

 private:
  BassSerre bs_;
};

}  // namespace ckaw

#endif
