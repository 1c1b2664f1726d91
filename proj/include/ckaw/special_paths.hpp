#ifndef CKAW_SPECIAL_PATHS_HPP
#define CKAW_SPECIAL_PATHS_HPP

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "ckaw/model_space.hpp"

namespace ckaw {

// A geodesic inside one piece, realized as a staircase: tree move first, then fiber move.
struct Leg {
  TreeVertex piece;
  Word from_y;
  long from_h = 0;
  Word to_y;
  long to_h = 0;

  long length() const { return tree_distance(from_y, to_y) + std::labs(from_h - to_h); }
};

struct SpecialPath {
  XPoint x, y;
  std::vector<TreeVertex> pieces;  // tree geodesic actually used
  std::vector<XPoint> corners;
  std::vector<Leg> legs;

  long length() const {
    long n = 0;
    for (const Leg& l : legs) n += l.length();
    return n;
  }
};

// Tree geodesic between pieces containing x and y, shortened at both ends while the endpoint
// still lies in the next piece.
inline std::vector<TreeVertex> special_pieces(const ModelSpace& X, const XPoint& x, const XPoint& y) {
  std::vector<TreeVertex> path = BassSerre::geodesic(x.piece, y.piece, X.tree());
  std::size_t i = 0, j = path.size() - 1;
  while (i < j && X.coords_in(x, path[i + 1])) ++i;
  while (j > i && X.coords_in(y, path[j - 1])) --j;
  return std::vector<TreeVertex>(path.begin() + static_cast<long>(i), path.begin() + static_cast<long>(j) + 1);
}

inline SpecialPath special_path(const ModelSpace& X, const XPoint& x0, const XPoint& y0) {
  SpecialPath sp;
  sp.x = X.canonical(x0);
  sp.y = X.canonical(y0);
  sp.pieces = special_pieces(X, sp.x, sp.y);
  const auto& P = sp.pieces;
  const std::size_t n = P.size() - 1;
  // Corner i (1-based) in the coordinates of P[i-1] and of P[i].
  std::vector<std::pair<Word, long>> in_left(n + 1), in_right(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    StripEnd before = i == 1 ? StripEnd{sp.x} : StripEnd{P[i - 2]};
    StripEnd after = i == n ? StripEnd{sp.y} : StripEnd{P[i + 1]};
    auto [s, t] = X.corner_coords(before, P[i - 1], P[i], after);
    Word yl = axis_vertex(X.plane_line(P[i - 1], P[i]), s);
    in_left[i] = {yl, t};
    in_right[i] = *X.across(P[i - 1], yl, t, P[i]);
    sp.corners.push_back(X.canonical(XPoint{P[i - 1], yl, t}));
  }
  auto start = *X.coords_in(sp.x, P[0]);
  auto end = *X.coords_in(sp.y, P[n]);
  for (std::size_t i = 0; i <= n; ++i) {
    auto a = i == 0 ? start : in_right[i];
    auto b = i == n ? end : in_left[i + 1];
    sp.legs.push_back(Leg{P[i], a.first, a.second, b.first, b.second});
  }
  return sp;
}

// Vertex sequence of the special path (consecutive vertices at distance 1, plane points
// listed once).
inline std::vector<XPoint> path_vertices(const ModelSpace& X, const SpecialPath& sp) {
  std::vector<XPoint> out;
  for (const Leg& l : sp.legs) {
    for (const Word& w : tree_geodesic(l.from_y, l.to_y)) {
      XPoint p = X.canonical(XPoint{l.piece, w, l.from_h});
      if (out.empty() || !(out.back() == p)) out.push_back(p);
    }
    long dir = l.to_h > l.from_h ? 1 : -1;
    for (long h = l.from_h; h != l.to_h;) {
      h += dir;
      XPoint p = X.canonical(XPoint{l.piece, l.to_y, h});
      if (out.empty() || !(out.back() == p)) out.push_back(p);
    }
  }
  return out;
}

struct QgRow {
  std::size_t id = 0;
  long oracle = 0;
  long special = 0;
  double ratio = 1.0;
};

struct QgFit {
  double mu_mult = 1.0;   // max ratio special/oracle over pairs with oracle > 0
  long mu_add = 0;        // max (special - oracle), the additive constant at slope 1
  std::vector<QgRow> rows;
  std::size_t excluded = 0;
  std::map<double, std::size_t> histogram;  // ratio bucket (0.1 wide, lower edge) -> count
};

inline QgFit qg_fit(const ModelSpace& X, const std::vector<std::pair<XPoint, XPoint>>& samples, long radius) {
  QgFit fit;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [x, y] = samples[i];
    auto d = X.oracle_distance(x, y, radius);
    if (!d) {
      ++fit.excluded;
      continue;
    }
    QgRow row{i, *d, special_path(X, x, y).length(), 1.0};
    if (row.oracle > 0) row.ratio = static_cast<double>(row.special) / static_cast<double>(row.oracle);
    fit.mu_mult = std::max(fit.mu_mult, row.ratio);
    fit.mu_add = std::max(fit.mu_add, row.special - row.oracle);
    fit.histogram[std::floor(row.ratio * 10.0) / 10.0]++;
    fit.rows.push_back(row);
  }
  return fit;
}

// Minimizing horizontal slide of x onto the plane between sigma and nbr.
inline XPoint horizontal_slide(const ModelSpace& X, const XPoint& x, const TreeVertex& sigma,
                               const TreeVertex& nbr) {
  auto c = X.coords_in(x, sigma);
  if (!c) throw WrongPiece("point is not in the given piece");
  Axis line = X.plane_line(sigma, nbr);
  return X.canonical(XPoint{sigma, project_to_axis(c->first, line).point, c->second});
}

// ---- templates ---------------------------------------------------------------

// Walls are the planes along a tree geodesic P[0..n]; wall i (1-based) lies between P[i-1]
// and P[i] and uses P[i-1]'s plane coordinates (s, t). Strip i (1 <= i < n) lives in P[i]
// and joins wall i along {S = attach_prev} (P[i] coordinates) to wall i+1 along
// {s = attach_next}. Every wall meets its strips along orthogonal lines.
struct TemplateStrip {
  long width = 1;       // bridge width, promoted to at least 1
  long raw_width = 0;
  long attach_prev = 0;
  long attach_next = 0;
};

struct Template {
  std::vector<TreeVertex> path;
  std::vector<PlaneMap> to_right;  // wall i: left coordinates -> P[i] coordinates
  std::vector<PlaneMap> to_left;
  std::vector<TemplateStrip> strips;  // strips[i] for 1 <= i < n
  double angle = std::numbers::pi / 2;

  std::size_t walls() const { return path.size() - 1; }
};

struct TemplatePoint {
  std::size_t wall = 1;
  long s = 0;
  long t = 0;

  friend bool operator==(const TemplatePoint&, const TemplatePoint&) = default;
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Template build_template(const ModelSpace& X, const std::vector<TreeVertex>& path) {
  if (path.size() < 3) throw TemplateError("a template needs at least two walls");
  Template T;
  T.path = path;
  const std::size_t n = path.size() - 1;
  T.to_right.resize(n + 1);
  T.to_left.resize(n + 1);
  T.strips.resize(n);
  for (std::size_t i = 1; i <= n; ++i) {
    T.to_right[i] = X.plane_map(path[i - 1], path[i]);
    T.to_left[i] = X.plane_map(path[i], path[i - 1]);
  }
  for (std::size_t i = 1; i < n; ++i) {
    Strip s = X.strip(path[i], path[i - 1], path[i + 1]);
    T.strips[i].raw_width = s.bridge.width;
    T.strips[i].width = std::max(1L, s.bridge.width);
    T.strips[i].attach_prev = s.bridge.param_a;
    T.strips[i].attach_next = s.bridge.param_b;
  }
  return T;
}

inline XPoint template_phi(const ModelSpace& X, const Template& T, const TemplatePoint& p) {
  const TreeVertex& a = T.path[p.wall - 1];
  const TreeVertex& b = T.path[p.wall];
  return X.canonical(XPoint{a, axis_vertex(X.plane_line(a, b), p.s), p.t});
}

struct TemplatePath {
  std::vector<TemplatePoint> corners;
  long length = 0;
};

// Special path in the template from a point of the first wall to a point of the last wall.
inline TemplatePath template_special_path(const Template& T, const TemplatePoint& x, const TemplatePoint& y) {
  const std::size_t n = T.walls();
  if (x.wall != 1 || y.wall != n) throw TemplateError("endpoints must lie on the first and last wall");
  TemplatePath out;
  for (std::size_t i = 1; i <= n; ++i) {
    long s = i == 1 ? x.s : T.strips[i - 1].attach_next;
    long S = i == n ? T.to_right[n](y.s, y.t).first : T.strips[i].attach_prev;
    // t is fixed by the right-hand line parameter S.
    long t = T.to_left[i](S, 0).second;
    out.corners.push_back({i, s, t});
  }
  long len = std::labs(x.s - out.corners[0].s) + std::labs(x.t - out.corners[0].t);
  for (std::size_t i = 1; i < n; ++i) {
    const TemplatePoint& p = out.corners[i - 1];
    const TemplatePoint& q = out.corners[i];
    long T_right = T.to_right[i](p.s, p.t).second;
    len += T.strips[i].width + std::labs(T_right - q.t) + std::labs(T.strips[i].attach_next - q.s);
  }
  len += std::labs(y.s - out.corners[n - 1].s) + std::labs(y.t - out.corners[n - 1].t);
  out.length = len;
  return out;
}

// Shortest path in the template graph, walls truncated to [c - radius, c + radius]^2 around
// the corner c, strips to the matching fiber range.
inline std::optional<long> template_distance(const Template& T, const TemplatePoint& x, const TemplatePoint& y,
                                             long radius) {
  const std::size_t n = T.walls();
  TemplatePath sp = template_special_path(T, x, y);
  struct Box { long s0, t0; long side; std::size_t offset; };
  std::vector<Box> boxes(n + 1);
  std::size_t total = 0;
  const long side = 2 * radius + 1;
  for (std::size_t i = 1; i <= n; ++i) {
    boxes[i] = {sp.corners[i - 1].s - radius, sp.corners[i - 1].t - radius, side, total};
    total += static_cast<std::size_t>(side * side);
  }
  // Strip interiors: (width-1) columns of fiber values, fiber range taken in P[i] coordinates.
  std::vector<std::size_t> strip_off(n, 0);
  std::vector<long> strip_f0(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    strip_off[i] = total;
    strip_f0[i] = T.to_right[i](sp.corners[i - 1].s, sp.corners[i - 1].t).second - radius;
    total += static_cast<std::size_t>((T.strips[i].width - 1) * side);
  }
  auto wall_id = [&](std::size_t i, long s, long t) -> std::optional<std::size_t> {
    const Box& b = boxes[i];
    if (s < b.s0 || s >= b.s0 + side || t < b.t0 || t >= b.t0 + side) return std::nullopt;
    return b.offset + static_cast<std::size_t>((s - b.s0) * side + (t - b.t0));
  };
  std::vector<std::vector<std::size_t>> adj(total);
  auto link = [&](std::size_t a, std::size_t b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (std::size_t i = 1; i <= n; ++i) {
    const Box& b = boxes[i];
    for (long s = b.s0; s < b.s0 + side; ++s) {
      for (long t = b.t0; t < b.t0 + side; ++t) {
        std::size_t id = *wall_id(i, s, t);
        if (auto r = wall_id(i, s + 1, t)) link(id, *r);
        if (auto r = wall_id(i, s, t + 1)) link(id, *r);
      }
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    const long w = T.strips[i].width;
    for (long f = strip_f0[i]; f < strip_f0[i] + side; ++f) {
      // Column k = 0 is wall i at S = attach_prev, column w is wall i+1 at s = attach_next.
      auto [ls, lt] = T.to_left[i](T.strips[i].attach_prev, f);
      std::optional<std::size_t> prev = wall_id(i, ls, lt);
      for (long k = 1; k <= w; ++k) {
        std::optional<std::size_t> cur;
        if (k == w) {
          cur = wall_id(i + 1, T.strips[i].attach_next, f);
        } else {
          cur = strip_off[i] + static_cast<std::size_t>((k - 1) * side + (f - strip_f0[i]));
          if (f > strip_f0[i]) link(*cur, *cur - 1);
        }
        if (prev && cur) link(*prev, *cur);
        prev = cur;
      }
    }
  }
  auto src = wall_id(1, x.s, x.t), dst = wall_id(n, y.s, y.t);
  if (!src || !dst) return std::nullopt;
  std::vector<long> dist(total, -1);
  std::deque<std::size_t> q{*src};
  dist[*src] = 0;
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop_front();
    for (std::size_t v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  if (dist[*dst] < 0) return std::nullopt;
  return dist[*dst];
}

}  // namespace ckaw

#endif
