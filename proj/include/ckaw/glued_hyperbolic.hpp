#ifndef CKAW_GLUED_HYPERBOLIC_HPP
#define CKAW_GLUED_HYPERBOLIC_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <unordered_map>
#include <vector>

#include "ckaw/model_space.hpp"

namespace ckaw {

// Point of a glued space: a vertex of Ybar_sigma, or the parameter t on the binding line of
// the flat link of sigma.
struct GluedPoint {
  TreeVertex sigma;
  bool binding = false;
  Word ybar;
  long t = 0;

  friend bool operator==(const GluedPoint&, const GluedPoint&) = default;
};

struct EmbeddingImage {
  GluedPoint first;   // in the space of parity 0
  GluedPoint second;  // in the space of parity 1
};

class GluedSpace {
 public:
  struct Piece {
    TreeVertex sigma;
    std::vector<Word> ybar;
    std::unordered_map<Word, std::size_t, WordHash> index;
    std::size_t offset = 0;
  };
  struct Binding {
    TreeVertex sigma;
    long lo = 0, hi = -1;
    std::size_t offset = 0;
    std::size_t size() const { return hi < lo ? 0 : static_cast<std::size_t>(hi - lo + 1); }
  };

  int parity = 0;
  std::vector<Piece> pieces;
  std::vector<Binding> bindings;
  std::vector<std::vector<std::size_t>> adj;
  std::size_t node_count = 0;

  std::optional<std::size_t> node(const GluedPoint& p) const {
    if (p.binding) {
      for (const auto& b : bindings)
        if (b.sigma == p.sigma && p.t >= b.lo && p.t <= b.hi) return b.offset + static_cast<std::size_t>(p.t - b.lo);
      return std::nullopt;
    }
    for (const auto& pc : pieces) {
      if (!(pc.sigma == p.sigma)) continue;
      auto it = pc.index.find(p.ybar);
      if (it != pc.index.end()) return pc.offset + it->second;
    }
    return std::nullopt;
  }

  GluedPoint point(std::size_t id) const {
    for (const auto& pc : pieces)
      if (id >= pc.offset && id < pc.offset + pc.ybar.size()) return {pc.sigma, false, pc.ybar[id - pc.offset], 0};
    for (const auto& b : bindings)
      if (id >= b.offset && id < b.offset + b.size()) return {b.sigma, true, {}, b.lo + static_cast<long>(id - b.offset)};
    throw std::out_of_range("node id outside the glued window");
  }

  std::vector<long> bfs(std::size_t src, std::vector<std::size_t>* parent = nullptr) const {
    std::vector<long> dist(node_count, -1);
    if (parent) parent->assign(node_count, src);
    std::deque<std::size_t> q{src};
    dist[src] = 0;
    while (!q.empty()) {
      std::size_t u = q.front();
      q.pop_front();
      for (std::size_t v : adj[u]) {
        if (dist[v] >= 0) continue;
        dist[v] = dist[u] + 1;
        if (parent) (*parent)[v] = u;
        q.push_back(v);
      }
    }
    return dist;
  }

  std::optional<long> distance(const GluedPoint& a, const GluedPoint& b) const {
    auto s = node(a), t = node(b);
    if (!s || !t) return std::nullopt;
    long d = bfs(*s)[*t];
    if (d < 0) return std::nullopt;
    return d;
  }

  // Node sequence of one shortest path, empty if unreachable.
  std::vector<std::size_t> shortest_path(std::size_t s, std::size_t t) const {
    std::vector<std::size_t> parent;
    auto d = bfs(s, &parent);
    if (d[t] < 0) return {};
    std::vector<std::size_t> out{t};
    while (out.back() != s) out.push_back(parent[out.back()]);
    std::reverse(out.begin(), out.end());
    return out;
  }

  bool connected() const {
    if (node_count == 0) return true;
    auto d = bfs(0);
    return std::none_of(d.begin(), d.end(), [](long x) { return x < 0; });
  }
};

// Region of one tree vertex: Ybar vertices for pieces of the chosen parity, a binding-line
// range for the others.
struct GluedRegion {
  TreeVertex sigma;
  std::vector<Word> ybar;
  long lo = 0, hi = -1;
};

inline GluedSpace build_glued_window(const ModelSpace& X, int parity, std::vector<GluedRegion> regions,
                                     std::size_t budget = 20'000'000) {
  GluedSpace G;
  G.parity = parity;
  std::size_t total = 0;
  for (auto& r : regions) {
    if (r.sigma.parity() == parity) {
      GluedSpace::Piece p;
      p.sigma = r.sigma;
      std::sort(r.ybar.begin(), r.ybar.end(), ShortlexLess{});
      r.ybar.erase(std::unique(r.ybar.begin(), r.ybar.end()), r.ybar.end());
      p.ybar = std::move(r.ybar);
      for (std::size_t i = 0; i < p.ybar.size(); ++i) p.index.emplace(p.ybar[i], i);
      p.offset = total;
      total += p.ybar.size();
      G.pieces.push_back(std::move(p));
    } else {
      G.bindings.push_back({r.sigma, r.lo, r.hi, total});
      total += G.bindings.back().size();
    }
    if (total > budget) throw BudgetExceeded("glued window exceeds node budget of " + std::to_string(budget));
  }
  G.node_count = total;
  G.adj.assign(total, {});
  auto link = [&](std::size_t a, std::size_t b) {
    G.adj[a].push_back(b);
    G.adj[b].push_back(a);
  };
  for (const auto& p : G.pieces) {
    const int rank = X.graph().rank(p.sigma.vertex);
    for (std::size_t i = 0; i < p.ybar.size(); ++i) {
      for (const Word& nb : tree_neighbors(p.ybar[i], rank)) {
        auto it = p.index.find(nb);
        if (it != p.index.end() && it->second > i) link(p.offset + i, p.offset + it->second);
      }
    }
  }
  for (const auto& b : G.bindings) {
    for (std::size_t k = 0; k + 1 < b.size(); ++k) link(b.offset + k, b.offset + k + 1);
    // Rungs of the width-1 strips: boundary-line vertex with parameter s to binding vertex t.
    for (const auto& p : G.pieces) {
      if (!ModelSpace::is_child(p.sigma, b.sigma) && !ModelSpace::is_child(b.sigma, p.sigma)) continue;
      Axis line = X.plane_line(p.sigma, b.sigma);
      PlaneMap m = X.plane_map(p.sigma, b.sigma);
      for (std::size_t i = 0; i < p.ybar.size(); ++i) {
        AxisProjection pr = project_to_axis(p.ybar[i], line);
        if (pr.distance != 0) continue;
        long t = m(pr.param, 0).second;
        if (t >= b.lo && t <= b.hi) link(p.offset + i, b.offset + static_cast<std::size_t>(t - b.lo));
      }
    }
  }
  return G;
}

// All tree vertices within tree_radius of center; pieces are Ybar balls around the identity,
// binding lines cover [-fiber_radius, fiber_radius].
inline GluedSpace build_glued(const ModelSpace& X, int parity, const TreeVertex& center, int tree_radius,
                              std::size_t cap, int ybar_radius, long fiber_radius,
                              std::size_t budget = 20'000'000) {
  std::vector<GluedRegion> regions;
  for (const TreeVertex& t : X.tree().tree_ball(center, tree_radius, cap)) {
    if (t.parity() == parity)
      regions.push_back({t, ball(X.graph().rank(t.vertex), ybar_radius), 0, -1});
    else
      regions.push_back({t, {}, -fiber_radius, fiber_radius});
  }
  return build_glued_window(X, parity, std::move(regions), budget);
}

// Image of x in the space of the given parity, read in the coordinates of piece sigma.
inline GluedPoint phi_at(const ModelSpace& X, const XPoint& x, const TreeVertex& sigma, int parity) {
  auto c = X.coords_in(x, sigma);
  if (!c) throw WrongPiece("point is not in the given piece");
  if (sigma.parity() == parity) return {sigma, false, c->first, 0};
  return {sigma, true, {}, c->second};
}

inline GluedPoint phi_part(const ModelSpace& X, const XPoint& x, int parity) {
  XPoint c = X.canonical(x);
  return phi_at(X, c, c.piece, parity);
}

inline EmbeddingImage phi(const ModelSpace& X, const XPoint& x) {
  return {phi_part(X, x, 0), phi_part(X, x, 1)};
}

// Window along the tree geodesic between a and b: Ybar hulls of the endpoints and of the
// boundary lines within `radius` of their bridge points, binding lines covering the rungs.
inline GluedSpace glued_corridor(const ModelSpace& X, int parity, const GluedPoint& a, const GluedPoint& b,
                                 long radius, std::size_t budget = 20'000'000) {
  const auto path = BassSerre::geodesic(a.sigma, b.sigma, X.tree());
  const std::size_t n = path.size() - 1;
  std::vector<GluedRegion> regions(n + 1);
  // Binding-line fibers reached by rungs, per path index.
  std::vector<std::vector<long>> fibers(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const TreeVertex& s = path[i];
    regions[i].sigma = s;
    if (s.parity() != parity) continue;
    std::vector<Word> keys;
    if (i == 0) keys.push_back(a.ybar);
    if (i == n) keys.push_back(b.ybar);
    StripEnd before = i == 0 ? StripEnd{XPoint{s, a.ybar, 0}} : StripEnd{path[i - 1]};
    StripEnd after = i == n ? StripEnd{XPoint{s, b.ybar, 0}} : StripEnd{path[i + 1]};
    auto add_line = [&](std::size_t nb, const StripEnd& other) {
      Axis line = X.plane_line(s, path[nb]);
      long c = X.strip_meet_param(s, other, path[nb]);
      keys.push_back(axis_vertex(line, c - radius));
      keys.push_back(axis_vertex(line, c + radius));
      PlaneMap m = X.plane_map(s, path[nb]);
      fibers[nb].push_back(m(c - radius, 0).second);
      fibers[nb].push_back(m(c + radius, 0).second);
    };
    if (i > 0) add_line(i - 1, after);
    if (i < n) add_line(i + 1, before);
    regions[i].ybar = ModelSpace::hull(keys, X.graph().rank(s.vertex), 1);
  }
  for (std::size_t i = 0; i <= n; ++i) {
    if (path[i].parity() == parity) continue;
    auto& f = fibers[i];
    if (i == 0) f.push_back(a.t);
    if (i == n) f.push_back(b.t);
    auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    regions[i].lo = *lo - radius;
    regions[i].hi = *hi + radius;
  }
  return build_glued_window(X, parity, std::move(regions), budget);
}

inline std::optional<long> glued_distance(const ModelSpace& X, int parity, const GluedPoint& a,
                                          const GluedPoint& b, long radius) {
  return glued_corridor(X, parity, a, b, radius).distance(a, b);
}

struct DistortionRow {
  std::size_t id = 0;
  long d_x = 0;
  long d_1 = 0;
  long d_2 = 0;
  long image() const { return d_1 + d_2; }
};

// Envelope lambda = max over pairs of max(d/(s+1), s/(d+1)), so that
// d/lambda - lambda <= s <= lambda*d + lambda on every pair.
inline double lambda_envelope(long d, long s) {
  return std::max(static_cast<double>(d) / static_cast<double>(s + 1),
                  static_cast<double>(s) / static_cast<double>(d + 1));
}

struct DistortionReport {
  double C = 1.0;
  std::vector<DistortionRow> rows;
  std::size_t excluded = 0;
  std::map<long, std::size_t> histogram;  // d_x - image -> count
};

inline DistortionReport distortion_report(const ModelSpace& X, const std::vector<std::pair<XPoint, XPoint>>& samples,
                                          long radius) {
  DistortionReport rep;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [x, y] = samples[i];
    EmbeddingImage px = phi(X, x), py = phi(X, y);
    auto d1 = glued_distance(X, 0, px.first, py.first, radius);
    auto d2 = glued_distance(X, 1, px.second, py.second, radius);
    if (!d1 || !d2) {
      ++rep.excluded;
      continue;
    }
    DistortionRow row{i, X.distance(x, y), *d1, *d2};
    rep.C = std::max(rep.C, lambda_envelope(row.d_x, row.image()));
    rep.histogram[row.d_x - row.image()]++;
    rep.rows.push_back(row);
  }
  return rep;
}

// Largest four-point defect over sampled quadruples of window nodes, halved: the Gromov delta
// estimate of the window.
inline double four_point_delta(const GluedSpace& G, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, G.node_count - 1);
  std::map<std::size_t, std::vector<long>> cache;
  auto dist = [&](std::size_t a, std::size_t b) {
    auto it = cache.find(a);
    if (it == cache.end()) it = cache.emplace(a, G.bfs(a)).first;
    return it->second[b];
  };
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < 24 && i < G.node_count; ++i) pool.push_back(pick(rng));
  std::uniform_int_distribution<std::size_t> from_pool(0, pool.size() - 1);
  long worst = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    std::size_t p[4] = {pool[from_pool(rng)], pool[from_pool(rng)], pool[from_pool(rng)], pool[from_pool(rng)]};
    long s[3] = {dist(p[0], p[1]) + dist(p[2], p[3]), dist(p[0], p[2]) + dist(p[1], p[3]),
                 dist(p[0], p[3]) + dist(p[1], p[2])};
    if (s[0] < 0 || s[1] < 0 || s[2] < 0) continue;
    std::sort(s, s + 3);
    worst = std::max(worst, s[2] - s[1]);
  }
  return static_cast<double>(worst) / 2.0;
}

inline void export_csv(const GluedSpace& G, const ModelSpace& X, std::ostream& os) {
  auto name = [&](std::size_t id) {
    GluedPoint p = G.point(id);
    std::string s = X.tree().format(p.sigma) + " | ";
    if (p.binding) return s + "t=" + std::to_string(p.t);
    return s + format_word(p.ybar, X.graph().alphabet(p.sigma.vertex));
  };
  os << "u,v,weight\n";
  for (std::size_t u = 0; u < G.node_count; ++u)
    for (std::size_t v : G.adj[u])
      if (v > u) os << '"' << name(u) << "\",\"" << name(v) << "\",1\n";
}

}  // namespace ckaw

#endif
