#ifndef CKAW_ADMISSIBLE_HPP
#define CKAW_ADMISSIBLE_HPP

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ckaw/freegroup.hpp"

namespace ckaw {

struct VertexSpec {
  std::string id;
  int rank = 2;
  Alphabet alphabet;
};

// Edge from -> to. The identification of planes swaps roles: the axis parameter on the
// `from` side becomes the fiber on the `to` side and vice versa, through
//   fiber_to = signs[0] * s_from + offsets[0],   axis_to = signs[1] * t_from + offsets[1].
struct EdgeSpec {
  std::string id;
  int from = 0;
  int to = 0;
  Word word_from;
  Word word_to;
  std::array<long, 2> offsets{0, 0};
  std::array<int, 2> signs{1, 1};
};

struct AdmissibleGraph {
  std::string name;
  std::vector<VertexSpec> vertices;
  std::vector<EdgeSpec> edges;
  int base = 0;

  int vertex_index(const std::string& id) const {
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (vertices[i].id == id) return static_cast<int>(i);
    return -1;
  }
  int edge_index(const std::string& id) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].id == id) return static_cast<int>(i);
    return -1;
  }
  const Alphabet& alphabet(int v) const { return vertices.at(static_cast<std::size_t>(v)).alphabet; }
  int rank(int v) const { return vertices.at(static_cast<std::size_t>(v)).rank; }
};

class AdmissibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownEdge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class IssueKind { NotPrimitive, NotCyclicallyReduced, DependentPair };

inline const char* to_string(IssueKind k) {
  switch (k) {
    case IssueKind::NotPrimitive: return "not-primitive";
    case IssueKind::NotCyclicallyReduced: return "not-cyclically-reduced";
    case IssueKind::DependentPair: return "dependent-pair";
  }
  return "?";
}

struct ValidationIssue {
  IssueKind kind;
  std::string vertex;
  std::vector<std::string> edge_ends;  // "edge:from" / "edge:to"
  std::vector<std::string> words;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
  friend bool operator<(const ValidationIssue& a, const ValidationIssue& b) {
    return std::tie(a.vertex, a.kind, a.edge_ends, a.words) <
           std::tie(b.vertex, b.kind, b.edge_ends, b.words);
  }
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  // Edge groups are Z(G_v) x Z(G_w) in the flip model, so the last admissibility
  // condition holds automatically.
  bool edge_group_condition_automatic = true;

  bool ok() const { return issues.empty(); }
};

struct EdgeEnd {
  int edge = 0;
  int side = 0;  // 0 = from, 1 = to
};

inline std::vector<EdgeEnd> edge_ends_at(const AdmissibleGraph& g, int v) {
  std::vector<EdgeEnd> out;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (g.edges[e].from == v) out.push_back({static_cast<int>(e), 0});
    if (g.edges[e].to == v) out.push_back({static_cast<int>(e), 1});
  }
  return out;
}

inline const Word& edge_word(const AdmissibleGraph& g, EdgeEnd end) {
  const EdgeSpec& e = g.edges.at(static_cast<std::size_t>(end.edge));
  return end.side == 0 ? e.word_from : e.word_to;
}

inline ValidationReport validate_admissible(const AdmissibleGraph& g) {
  if (g.edges.empty()) throw AdmissibilityError("graph has no edges");
  for (const auto& v : g.vertices) {
    if (v.rank < 2) {
      throw AdmissibilityError("vertex " + v.id + " has rank " + std::to_string(v.rank) +
                               " < 2 (elementary vertex group)");
    }
  }
  ValidationReport rep;
  for (std::size_t vi = 0; vi < g.vertices.size(); ++vi) {
    const int v = static_cast<int>(vi);
    const Alphabet& alpha = g.alphabet(v);
    auto ends = edge_ends_at(g, v);
    auto label = [&](EdgeEnd e) {
      return g.edges[static_cast<std::size_t>(e.edge)].id + (e.side == 0 ? ":from" : ":to");
    };
    std::vector<std::pair<EdgeEnd, CyclicWord>> roots;
    for (EdgeEnd end : ends) {
      const Word& w = edge_word(g, end);
      if (w.empty() || !is_primitive(w)) {
        rep.issues.push_back({IssueKind::NotPrimitive, g.vertices[vi].id, {label(end)},
                              {format_word(w, alpha)}});
        if (w.empty()) continue;
      }
      if (!is_cyclically_reduced(w)) {
        rep.issues.push_back({IssueKind::NotCyclicallyReduced, g.vertices[vi].id, {label(end)},
                              {format_word(w, alpha)}});
      }
      roots.emplace_back(end, primitive_root(w));
    }
    for (std::size_t i = 0; i < roots.size(); ++i) {
      for (std::size_t j = i + 1; j < roots.size(); ++j) {
        if (!independent(roots[i].second, roots[j].second)) {
          std::vector<std::string> names{label(roots[i].first), label(roots[j].first)};
          std::vector<std::string> words{format_word(edge_word(g, roots[i].first), alpha),
                                         format_word(edge_word(g, roots[j].first), alpha)};
          if (names[1] < names[0]) {
            std::swap(names[0], names[1]);
            std::swap(words[0], words[1]);
          }
          rep.issues.push_back({IssueKind::DependentPair, g.vertices[vi].id, names, words});
        }
      }
    }
  }
  std::sort(rep.issues.begin(), rep.issues.end());
  return rep;
}

// Plane coordinates on one side of an edge: s along the boundary line, t along the fiber.
struct PlaneCoord {
  int edge = 0;
  long s = 0;
  long t = 0;

  friend bool operator==(const PlaneCoord&, const PlaneCoord&) = default;
};

enum class Side { From = 0, To = 1 };

inline PlaneCoord flip_transfer(const AdmissibleGraph& g, const PlaneCoord& p, Side from_side) {
  if (p.edge < 0 || p.edge >= static_cast<int>(g.edges.size())) {
    throw UnknownEdge("unknown edge index " + std::to_string(p.edge));
  }
  const EdgeSpec& e = g.edges[static_cast<std::size_t>(p.edge)];
  PlaneCoord out{p.edge, 0, 0};
  if (from_side == Side::From) {
    out.t = e.signs[0] * p.s + e.offsets[0];
    out.s = e.signs[1] * p.t + e.offsets[1];
  } else {
    out.s = e.signs[0] * (p.t - e.offsets[0]);
    out.t = e.signs[1] * (p.s - e.offsets[1]);
  }
  return out;
}

inline Side other(Side s) { return s == Side::From ? Side::To : Side::From; }

}  // namespace ckaw

#endif
