#ifndef CKAW_SUBGROUPS_HPP
#define CKAW_SUBGROUPS_HPP

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ckaw/glued_hyperbolic.hpp"
#include "ckaw/special_paths.hpp"

namespace ckaw {

class NotFreeEvidence : public std::runtime_error {
 public:
  NotFreeEvidence(const std::string& msg, std::vector<int> w) : std::runtime_error(msg), witness(std::move(w)) {}
  std::vector<int> witness;  // word in the generators, +-(i+1) for g_i and its inverse
};

class WindowMiss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_identity(const GroupElement& g) { return g.steps.empty() && g.tail.trivial(); }

// Contracting (Morse) iff loxodromic on the Bass-Serre tree.
inline bool morse_test(const BassSerre& bs, const GroupElement& g) {
  if (is_identity(g)) throw std::invalid_argument("morse_test needs a nontrivial element");
  return bs.translation_length(g).length > 0;
}

// ---- words in subgroup generators ----------------------------------------------------

using GenWord = std::vector<int>;

inline GroupElement evaluate(const BassSerre& bs, const std::vector<GroupElement>& gens, const GenWord& w) {
  GroupElement out = bs.identity();
  for (int l : w) {
    const GroupElement& g = gens.at(static_cast<std::size_t>(std::abs(l) - 1));
    out = bs.multiply(out, l > 0 ? g : bs.inverse(g));
  }
  return out;
}

// Reduced words of length 1..L in shortlex order (length, then letters 1, -1, 2, -2, ...).
inline std::vector<GenWord> reduced_gen_words(std::size_t rank, int L) {
  std::vector<int> letters;
  for (std::size_t i = 1; i <= rank; ++i) {
    letters.push_back(static_cast<int>(i));
    letters.push_back(-static_cast<int>(i));
  }
  std::vector<GenWord> out, layer{GenWord{}};
  for (int len = 1; len <= L; ++len) {
    std::vector<GenWord> next;
    for (const GenWord& w : layer)
      for (int l : letters) {
        if (!w.empty() && w.back() == -l) continue;
        GenWord v = w;
        v.push_back(l);
        next.push_back(std::move(v));
      }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

inline GenWord reduce_gen_word(GenWord w) {
  GenWord out;
  for (int l : w) {
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

inline GenWord inverse_gen_word(const GenWord& w) {
  GenWord out(w.rbegin(), w.rend());
  for (int& l : out) l = -l;
  return out;
}

inline std::string format_gen_word(const GenWord& w) {
  if (w.empty()) return "1";
  std::string s;
  for (int l : w) {
    if (!s.empty()) s += ".";
    s += "g" + std::to_string(std::abs(l)) + (l < 0 ? "^-1" : "");
  }
  return s;
}

struct SubgroupSpec {
  std::vector<GroupElement> generators;
  int verified_free_up_to = 0;
  bool verified = false;
  std::size_t words_checked = 0;
  std::optional<GenWord> witness;  // first short word that is trivial or elliptic
};

// Checks that every nontrivial reduced word of length <= L is a loxodromic element.
inline SubgroupSpec screen_free(const BassSerre& bs, std::vector<GroupElement> gens, int L = 6) {
  if (gens.empty()) throw std::invalid_argument("subgroup needs at least one generator");
  SubgroupSpec spec;
  spec.generators = std::move(gens);
  spec.verified_free_up_to = L;
  spec.verified = true;
  for (const GenWord& w : reduced_gen_words(spec.generators.size(), L)) {
    ++spec.words_checked;
    GroupElement g = evaluate(bs, spec.generators, w);
    if (is_identity(g) || bs.translation_length(g).length == 0) {
      spec.verified = false;
      spec.witness = w;
      break;
    }
  }
  return spec;
}

// ---- core ------------------------------------------------------------------------------

struct OrbitPoint {
  GenWord word;
  GroupElement element;
  XPoint point;   // element applied to the basepoint
};

struct CoreSpace {
  XPoint x0;
  int orbit_radius = 0;
  std::vector<OrbitPoint> orbit;            // reduced generator words up to orbit_radius, identity first
  std::vector<std::vector<XPoint>> segments;  // g(gamma_j) as vertex lists
  std::vector<TreeVertex> tree_window;      // union of tree geodesics between adjacent orbit vertices
  long mu_core = 0;
  long delta_prime = 0;

  std::vector<XPoint> points() const {
    std::vector<XPoint> out;
    for (const auto& s : segments)
      for (const XPoint& p : s) out.push_back(p);
    return out;
  }
};

inline std::vector<OrbitPoint> orbit_ball(const ModelSpace& X, const std::vector<GroupElement>& gens, const XPoint& x0,
                                          int radius) {
  std::vector<OrbitPoint> out{{GenWord{}, X.tree().identity(), X.canonical(x0)}};
  for (GenWord& w : reduced_gen_words(gens.size(), radius)) {
    GroupElement g = evaluate(X.tree(), gens, w);
    XPoint p = X.act(g, x0);
    out.push_back({std::move(w), std::move(g), std::move(p)});
  }
  return out;
}

// Core of the subgroup: translates of special paths from x0 to g_j(x0) along the Cayley edges of the orbit ball.
inline CoreSpace build_core(const ModelSpace& X, const SubgroupSpec& spec, int orbit_radius,
                            std::optional<XPoint> basepoint = std::nullopt) {
  const BassSerre& bs = X.tree();
  long max_len = 0;
  for (const auto& g : spec.generators) max_len = std::max(max_len, static_cast<long>(g.steps.size()));
  for (std::size_t i = 0; i < spec.generators.size(); ++i)
    if (is_identity(spec.generators[i]) || bs.translation_length(spec.generators[i]).length == 0)
      throw NotFreeEvidence("generator is elliptic", GenWord{static_cast<int>(i + 1)});
  if (!spec.verified) throw NotFreeEvidence("short word is elliptic or trivial", spec.witness.value_or(GenWord{}));
  if (spec.verified_free_up_to < 2 * max_len)
    throw std::invalid_argument("freeness screen length is below twice the longest generator");
  CoreSpace core;
  core.x0 = X.canonical(basepoint.value_or(XPoint{bs.base_vertex(), Word{}, 0}));
  core.orbit_radius = orbit_radius;
  core.orbit = orbit_ball(X, spec.generators, core.x0, orbit_radius);
  std::vector<std::vector<XPoint>> gammas;
  for (const auto& g : spec.generators)
    gammas.push_back(path_vertices(X, special_path(X, core.x0, X.act(g, core.x0))));
  std::set<TreeVertex, TreeVertexLess> tw;
  for (const OrbitPoint& o : core.orbit) {
    for (std::size_t j = 0; j < gammas.size(); ++j) {
      GenWord next = o.word;
      next.push_back(static_cast<int>(j + 1));
      if (static_cast<int>(reduce_gen_word(next).size()) > orbit_radius) continue;
      std::vector<XPoint> seg;
      for (const XPoint& p : gammas[j]) seg.push_back(X.act(o.element, p));
      XPoint end = X.act(o.element, X.act(spec.generators[j], core.x0));
      for (const TreeVertex& t : BassSerre::geodesic(X.rho(o.point), X.rho(end), bs)) tw.insert(t);
      core.segments.push_back(std::move(seg));
    }
  }
  core.tree_window.assign(tw.begin(), tw.end());
  // Diameter of the core inside each piece of the window.
  std::vector<XPoint> pts = core.points();
  for (const TreeVertex& s : core.tree_window) {
    std::vector<std::pair<Word, long>> in;
    for (const XPoint& p : pts)
      if (auto c = X.coords_in(p, s)) in.push_back(*c);
    for (std::size_t a = 0; a < in.size(); ++a)
      for (std::size_t b = a + 1; b < in.size(); ++b)
        core.mu_core = std::max(core.mu_core, ModelSpace::l1(in[a].first, in[a].second, in[b].first, in[b].second));
  }
  for (const TreeVertex& t : core.tree_window) {
    long best = std::numeric_limits<long>::max();
    for (const OrbitPoint& o : core.orbit) best = std::min(best, BassSerre::distance(t, X.rho(o.point)));
    core.delta_prime = std::max(core.delta_prime, best);
  }
  return core;
}

// ---- projection ------------------------------------------------------------------------

struct Projection {
  XPoint point;
  GenWord word;
  TreeVertex tree_foot;
};

inline bool gen_word_less(const GenWord& a, const GenWord& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  auto key = [](int l) { return 2 * std::abs(l) + (l < 0 ? 1 : 0); };
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return key(a[i]) < key(b[i]);
  return false;
}

// Project rho(x) to the nearest vertex of the tree window, then return the orbit point whose
// vertex is nearest to that foot (shortlex least word on ties), within delta'.
inline Projection ps_projection(const ModelSpace& X, const CoreSpace& core, const XPoint& x) {
  TreeVertex r = X.rho(x);
  const TreeVertex* foot = nullptr;
  long best = std::numeric_limits<long>::max();
  for (const TreeVertex& t : core.tree_window) {
    long d = BassSerre::distance(r, t);
    if (d < best) {
      best = d;
      foot = &t;
    }
  }
  if (!foot) throw WindowMiss("empty tree window");
  const OrbitPoint* pick = nullptr;
  long pd = std::numeric_limits<long>::max();
  for (const OrbitPoint& o : core.orbit) {
    long d = BassSerre::distance(*foot, X.rho(o.point));
    if (d > core.delta_prime) continue;
    if (!pick || d < pd || (d == pd && gen_word_less(o.word, pick->word))) {
      pick = &o;
      pd = d;
    }
  }
  if (!pick) throw WindowMiss("no orbit point near the projection");
  return {pick->point, pick->word, *foot};
}

// ---- contraction -----------------------------------------------------------------------

struct ContractionReport {
  long C = 0;
  std::size_t samples = 0;
  std::size_t tested = 0;        // pairs with d(pi x, pi y) >= C
  std::size_t violations_1 = 0;  // core points farther than C from their projection
  std::size_t violations_2 = 0;  // special paths missing the C-ball of a projection point
  bool pass() const { return violations_1 == 0 && violations_2 == 0; }
};

inline long distance_to_path(const ModelSpace& X, const XPoint& p, const std::vector<XPoint>& path) {
  long best = std::numeric_limits<long>::max();
  for (const XPoint& q : path) best = std::min(best, X.distance(p, q));
  return best;
}

inline ContractionReport contraction_check(const ModelSpace& X, const CoreSpace& core,
                                           const std::vector<std::pair<XPoint, XPoint>>& pairs, long C) {
  ContractionReport rep;
  rep.C = C;
  rep.samples = pairs.size();
  for (const auto& o : core.orbit)
    if (X.distance(o.point, ps_projection(X, core, o.point).point) > C) ++rep.violations_1;
  for (const auto& [x, y] : pairs) {
    XPoint px = ps_projection(X, core, x).point, py = ps_projection(X, core, y).point;
    if (X.distance(px, py) < C) continue;
    ++rep.tested;
    std::vector<XPoint> path = path_vertices(X, special_path(X, x, y));
    if (distance_to_path(X, px, path) > C || distance_to_path(X, py, path) > C) ++rep.violations_2;
  }
  return rep;
}

// Least C in [1, C_max] with zero violations, if any.
inline std::optional<ContractionReport> fit_contraction(const ModelSpace& X, const CoreSpace& core,
                                                        const std::vector<std::pair<XPoint, XPoint>>& pairs,
                                                        long C_max) {
  for (long C = 1; C <= C_max; ++C) {
    ContractionReport r = contraction_check(X, core, pairs, C);
    if (r.pass()) return r;
  }
  return std::nullopt;
}

// Max over sampled pairs of orbit points of the distance from special-path vertices to the core.
inline long neighborhood_radius(const ModelSpace& X, const CoreSpace& core, std::size_t samples, std::uint64_t seed) {
  std::vector<XPoint> pts = core.points();
  std::vector<TreeVertex> rho;
  for (const XPoint& p : pts) rho.push_back(X.rho(p));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, core.orbit.size() - 1);
  long R = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const XPoint& a = core.orbit[pick(rng)].point;
    const XPoint& b = core.orbit[pick(rng)].point;
    for (const XPoint& v : path_vertices(X, special_path(X, a, b))) {
      TreeVertex rv = X.rho(v);
      std::vector<std::size_t> order(pts.size());
      std::iota(order.begin(), order.end(), 0);
      std::vector<long> dt(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) dt[i] = BassSerre::distance(rv, rho[i]);
      std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return dt[i] < dt[j]; });
      long best = std::numeric_limits<long>::max();
      for (std::size_t i : order) {
        if (dt[i] - 1 > best) break;
        best = std::min(best, X.distance(v, pts[i]));
      }
      R = std::max(R, best);
    }
  }
  return R;
}

// ---- orbit map -------------------------------------------------------------------------

struct OrbitFit {
  double lambda = 1.0;
  double lower_slope = 0.0;  // min over pairs of d_T / word distance
  std::size_t pairs = 0;
};

// k -> k(v) into the tree over the reduced words up to radius.
inline OrbitFit orbit_map_fit(const BassSerre& bs, const std::vector<GroupElement>& gens, int radius) {
  std::vector<GenWord> words{GenWord{}};
  for (GenWord& w : reduced_gen_words(gens.size(), radius)) words.push_back(std::move(w));
  std::vector<TreeVertex> verts;
  for (const GenWord& w : words) verts.push_back(bs.vertex_of(evaluate(bs, gens, w)));
  OrbitFit fit;
  fit.lower_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < words.size(); ++i)
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      GenWord between = inverse_gen_word(words[i]);
      between.insert(between.end(), words[j].begin(), words[j].end());
      long dw = static_cast<long>(reduce_gen_word(between).size());
      long dt = BassSerre::distance(verts[i], verts[j]);
      ++fit.pairs;
      fit.lambda = std::max(fit.lambda, lambda_envelope(dw, dt));
      fit.lower_slope = std::min(fit.lower_slope, static_cast<double>(dt) / static_cast<double>(dw));
    }
  if (fit.pairs == 0) fit.lower_slope = 0.0;
  return fit;
}

// ---- height ------------------------------------------------------------------------------

// Generators of the fundamental group: the base vertex group, and for every other vertex the
// conjugates of its generators by a tree path from the base.
inline std::vector<GroupElement> group_generators(const BassSerre& bs) {
  const AdmissibleGraph& g = bs.graph();
  std::vector<std::vector<Syllable>> path(g.vertices.size());
  std::vector<char> seen(g.vertices.size(), 0);
  std::vector<int> queue{bs.base()};
  seen[static_cast<std::size_t>(bs.base())] = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    int v = queue[qi];
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      for (int dir : {1, -1}) {
        int ei = static_cast<int>(e);
        if (bs.depart(ei, dir) != v) continue;
        int t = bs.arrive(ei, dir);
        if (seen[static_cast<std::size_t>(t)]) continue;
        seen[static_cast<std::size_t>(t)] = 1;
        path[static_cast<std::size_t>(t)] = path[static_cast<std::size_t>(v)];
        Syllable s;
        s.is_edge = true;
        s.edge = ei;
        s.dir = dir;
        path[static_cast<std::size_t>(t)].push_back(s);
        queue.push_back(t);
      }
  }
  std::vector<GroupElement> out;
  for (int v : queue) {
    const auto& p = path[static_cast<std::size_t>(v)];
    auto conj = [&](VertexElement x) {
      std::vector<Syllable> raw = p;
      Syllable s;
      s.elem = std::move(x);
      raw.push_back(s);
      for (auto it = p.rbegin(); it != p.rend(); ++it) {
        Syllable back = *it;
        back.dir = -back.dir;
        raw.push_back(back);
      }
      return bs.normalize(raw);
    };
    for (int i = 1; i <= g.rank(v); ++i) out.push_back(conj(VertexElement{Word{{i}}, 0}));
    out.push_back(conj(VertexElement{Word{}, 1}));
  }
  return out;
}

struct HeightReport {
  int conj_radius = 0;
  int L = 0;
  std::size_t conjugators = 0;
  std::size_t witnessed = 0;          // g with a nontrivial short element in gKg^-1 and K
  std::size_t in_subgroup = 0;        // g found in K itself
  std::vector<std::string> family;    // essentially distinct conjugators, pairwise witnessed
  std::size_t elliptic_short = 0;     // short nontrivial elements of K that are elliptic
  bool finite_index_signal = false;   // every enumerated conjugator is witnessed
  bool vertex_intersections_trivial() const { return elliptic_short == 0; }
  std::size_t height_lower_bound() const { return family.size(); }
};

// Bounded search: conjugators up to conj_radius letters of the group generators, subgroup
// elements up to L generator letters.
inline HeightReport height_probe(const BassSerre& bs, const SubgroupSpec& spec, int conj_radius, int L = 3) {
  HeightReport rep;
  rep.conj_radius = conj_radius;
  rep.L = L;
  std::map<std::string, GroupElement> K;
  for (const GenWord& w : reduced_gen_words(spec.generators.size(), L)) {
    GroupElement g = evaluate(bs, spec.generators, w);
    if (is_identity(g)) continue;
    if (bs.translation_length(g).length == 0) ++rep.elliptic_short;
    K.emplace(bs.format(g), std::move(g));
  }
  auto in_K = [&](const GroupElement& g) { return is_identity(g) || K.count(bs.format(g)) > 0; };
  std::vector<GroupElement> S = group_generators(bs);
  std::map<std::string, GroupElement> conj;
  for (const GenWord& w : reduced_gen_words(S.size(), conj_radius)) {
    GroupElement g = evaluate(bs, S, w);
    conj.emplace(bs.format(g), std::move(g));
  }
  conj.emplace(bs.format(bs.identity()), bs.identity());
  auto witness = [&](const GroupElement& g, const GroupElement& h) {
    // Some short k in K with (g^-1 h) k (g^-1 h)^-1 in K.
    GroupElement c = bs.multiply(bs.inverse(g), h);
    for (const auto& [name, k] : K)
      if (in_K(bs.multiply(bs.multiply(c, k), bs.inverse(c)))) return true;
    return false;
  };
  std::vector<std::pair<std::string, GroupElement>> candidates;
  for (const auto& [name, g] : conj) {
    ++rep.conjugators;
    if (in_K(g)) ++rep.in_subgroup;
    if (witness(bs.identity(), g)) {
      ++rep.witnessed;
      candidates.emplace_back(name, g);
    }
  }
  rep.finite_index_signal = rep.witnessed == rep.conjugators;
  // Greedy family of cosets gK, pairwise distinct and pairwise witnessed.
  std::vector<GroupElement> chosen;
  for (const auto& [name, g] : candidates) {
    bool ok = true;
    for (const GroupElement& h : chosen) {
      if (in_K(bs.multiply(bs.inverse(h), g)) || !witness(h, g)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      chosen.push_back(g);
      rep.family.push_back(name);
    }
  }
  return rep;
}

}  // namespace ckaw

#endif
