#include <catch_amalgamated.hpp>

#include <random>

#include "ckaw/subgroups.hpp"
#include "test_points.hpp"

using namespace ckaw;

namespace {

// Minimum displacement over the vertices of [v, g v]: the translation length in a tree.
long displacement_oracle(const BassSerre& bs, const GroupElement& g) {
  TreeVertex v = bs.base_vertex();
  long best = -1;
  for (const TreeVertex& t : BassSerre::geodesic(v, bs.act(g, v), bs)) {
    long d = BassSerre::distance(t, bs.act(g, t));
    if (best < 0 || d < best) best = d;
  }
  return best;
}

std::vector<GroupElement> mixed_elements(const BassSerre& bs, std::uint64_t seed, int n) {
  std::vector<GroupElement> S = group_generators(bs);
  std::mt19937_64 rng(seed);
  std::vector<GroupElement> out;
  while (static_cast<int>(out.size()) < n) {
    GroupElement g = bs.identity();
    int len = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < len; ++i) {
      const GroupElement& s = S[rng() % S.size()];
      g = bs.multiply(g, rng() % 2 ? s : bs.inverse(s));
    }
    if (!is_identity(g)) out.push_back(g);
  }
  return out;
}

std::vector<std::pair<XPoint, XPoint>> sample_pairs(const ModelSpace& X, std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<XPoint, XPoint>> out;
  for (int i = 0; i < n; ++i) out.emplace_back(test::random_point(X, rng, 3, 3, 3), test::random_point(X, rng, 3, 3, 3));
  return out;
}

}  // namespace

TEST_CASE("morse test examples", "[subgroups]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  GroupElement g = bs.parse("(b,0).e.(d,0).e^-1");
  REQUIRE(morse_test(bs, g));
  REQUIRE(bs.translation_length(g).length == 2);
  REQUIRE_FALSE(morse_test(bs, bs.parse("(ab,3)")));
  REQUIRE_FALSE(morse_test(bs, bs.parse("e.(cd,1).e^-1")));
  GroupElement h = bs.parse("(a,0).e.(d,0).e^-1");
  REQUIRE(morse_test(bs, bs.multiply(bs.multiply(h, g), bs.inverse(h))));
  REQUIRE_THROWS_AS(morse_test(bs, bs.identity()), std::invalid_argument);
}

TEST_CASE("morse test agrees with the displacement oracle", "[subgroups][property]") {
  for (auto gr : {test::e1(), test::path3()}) {
    ModelSpace X(gr);
    const auto& bs = X.tree();
    auto elems = mixed_elements(bs, 131, 100);
    std::size_t lox = 0;
    for (const GroupElement& g : elems) {
      bool m = morse_test(bs, g);
      REQUIRE(m == (displacement_oracle(bs, g) > 0));
      lox += m;
      for (const GroupElement& c : mixed_elements(bs, 137, 3))
        REQUIRE(morse_test(bs, bs.multiply(bs.multiply(c, g), bs.inverse(c))) == m);
    }
    REQUIRE(lox > 10);
    REQUIRE(lox < 90);
  }
}

TEST_CASE("freeness screen", "[subgroups]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  GroupElement g = bs.parse("(b,0).e.(d,0).e^-1");
  SubgroupSpec one = screen_free(bs, {g}, 6);
  REQUIRE(one.verified);
  REQUIRE(one.words_checked == 12);
  SubgroupSpec two = screen_free(bs, {g, bs.parse("(bb,0).e.(dd,0).e^-1")}, 6);
  REQUIRE(two.verified);
  REQUIRE(two.words_checked == 4 * (729 - 1) / 2);
  SubgroupSpec bad = screen_free(bs, {g, bs.parse("(B,0).e.(d,0).e^-1")}, 6);
  REQUIRE_FALSE(bad.verified);
  REQUIRE(format_gen_word(*bad.witness) == "g1.g2^-1");
  REQUIRE_THROWS_AS(screen_free(bs, {}, 6), std::invalid_argument);
}

TEST_CASE("core construction refuses elliptic generators", "[subgroups]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  REQUIRE_THROWS_AS(build_core(X, screen_free(bs, {bs.parse("(ab,0)")}, 6), 2), NotFreeEvidence);
  REQUIRE_THROWS_AS(build_core(X, screen_free(bs, {bs.parse("(b,0).e.(d,0).e^-1"), bs.parse("(B,0).e.(d,0).e^-1")}, 6), 2),
                    NotFreeEvidence);
  REQUIRE_THROWS_AS(build_core(X, screen_free(bs, {bs.parse("(b,0).e.(d,0).e^-1")}, 1), 2), std::invalid_argument);
}

TEST_CASE("cyclic core is a quasi-line", "[subgroups]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  SubgroupSpec spec = screen_free(bs, {bs.parse("(b,0).e.(d,0).e^-1")}, 6);
  CoreSpace a = build_core(X, spec, 2), b = build_core(X, spec, 4);
  REQUIRE(a.mu_core == b.mu_core);
  REQUIRE(a.delta_prime == b.delta_prime);
  // The tree window is a path: every vertex has at most two window neighbours.
  for (const TreeVertex& t : b.tree_window) {
    int deg = 0;
    for (const TreeVertex& s : b.tree_window) deg += BassSerre::distance(s, t) == 1;
    REQUIRE(deg <= 2);
  }
  std::set<TreeVertex, TreeVertexLess> oracle;
  GroupElement g = spec.generators[0];
  for (int k = -4; k < 4; ++k) {
    XPoint p = X.act(bs.power(g, k), b.x0), q = X.act(bs.power(g, k + 1), b.x0);
    for (const TreeVertex& t : BassSerre::geodesic(X.rho(p), X.rho(q), bs)) oracle.insert(t);
  }
  REQUIRE(b.tree_window == std::vector<TreeVertex>(oracle.begin(), oracle.end()));
}

TEST_CASE("rank-two core is stable in the orbit radius", "[subgroups]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  SubgroupSpec spec = screen_free(bs, {bs.parse("(b,0).e.(d,0).e^-1"), bs.parse("(bb,0).e.(dd,0).e^-1")}, 6);
  CoreSpace a = build_core(X, spec, 2), b = build_core(X, spec, 3);
  REQUIRE(a.mu_core == b.mu_core);
  REQUIRE(b.orbit.size() == 1 + 4 + 12 + 36);
  bool branching = false;
  for (const TreeVertex& t : b.tree_window) {
    int deg = 0;
    for (const TreeVertex& s : b.tree_window) deg += BassSerre::distance(s, t) == 1;
    branching = branching || deg > 2;
  }
  REQUIRE(branching);
}

TEST_CASE("projection to the core", "[subgroups]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  SubgroupSpec spec = screen_free(bs, {bs.parse("(b,0).e.(d,0).e^-1")}, 6);
  CoreSpace core = build_core(X, spec, 3);
  for (const OrbitPoint& o : core.orbit) {
    Projection p = ps_projection(X, core, o.point);
    REQUIRE(X.distance(p.point, o.point) <= 2);
    REQUIRE(p.tree_foot == X.rho(o.point));
  }
  std::mt19937_64 rng(139);
  for (int i = 0; i < 50; ++i) {
    XPoint x = test::random_point(X, rng, 3, 3, 3);
    Projection p = ps_projection(X, core, x), q = ps_projection(X, core, x);
    REQUIRE(p.point == q.point);
    if (std::find(core.tree_window.begin(), core.tree_window.end(), X.rho(x)) != core.tree_window.end())
      REQUIRE(p.tree_foot == X.rho(x));
  }
}

TEST_CASE("cyclic Morse subgroup is contracting", "[subgroups][property]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  SubgroupSpec spec = screen_free(bs, {bs.parse("(b,0).e.(d,0).e^-1")}, 6);
  auto pairs = sample_pairs(X, 149, 300);
  CoreSpace a = build_core(X, spec, 3), b = build_core(X, spec, 6);
  auto fa = fit_contraction(X, a, pairs, 20), fb = fit_contraction(X, b, pairs, 20);
  REQUIRE(fa);
  REQUIRE(fb);
  REQUIRE(fa->C == fb->C);
  REQUIRE(fa->tested > 0);
  REQUIRE(contraction_check(X, b, pairs, fb->C).pass());
  REQUIRE(neighborhood_radius(X, a, 20, 151) == neighborhood_radius(X, b, 20, 151));
}

TEST_CASE("orbit maps", "[subgroups]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  OrbitFit lox = orbit_map_fit(bs, {bs.parse("(b,0).e.(d,0).e^-1"), bs.parse("(bb,0).e.(dd,0).e^-1")}, 3);
  REQUIRE(lox.lower_slope > 0.0);
  REQUIRE(lox.lambda < 2.0);
  OrbitFit ell = orbit_map_fit(bs, {bs.parse("(ab,0)")}, 6);
  REQUIRE(ell.lower_slope == 0.0);
}

TEST_CASE("height probes", "[subgroups]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  SubgroupSpec cyclic = screen_free(bs, {bs.parse("(b,0).e.(d,0).e^-1")}, 6);
  HeightReport h = height_probe(bs, cyclic, 2, 3);
  REQUIRE(h.vertex_intersections_trivial());
  REQUIRE_FALSE(h.finite_index_signal);
  // Conjugators inside K give the same coset and are not counted twice.
  REQUIRE(h.in_subgroup >= 2);
  REQUIRE(h.height_lower_bound() == 1);
  SubgroupSpec whole;
  whole.generators = group_generators(bs);
  HeightReport w = height_probe(bs, whole, 1, 2);
  REQUIRE(w.finite_index_signal);
  REQUIRE_FALSE(w.vertex_intersections_trivial());
}
