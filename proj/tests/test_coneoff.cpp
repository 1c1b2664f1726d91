#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "ckaw/coneoff.hpp"
#include "test_points.hpp"

using namespace ckaw;

namespace {

const Alphabet ab{"ab"};

Word w(const char* s) { return parse_word(s, ab); }

Word power(const char* s, int n) {
  Word out;
  for (int i = 0; i < n; ++i) out = multiply(out, w(s));
  return out;
}

// Coset representative of g<a>: drop trailing a-letters.
Word strip_a(Word g) {
  while (!g.letters.empty() && std::abs(g.letters.back()) == 1) g.letters.pop_back();
  return g;
}

std::vector<std::pair<XPoint, XPoint>> even_pairs(const ModelSpace& X, std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<XPoint, XPoint>> out;
  while (out.size() < n) {
    XPoint a = X.canonical(test::random_point(X, rng, 4, 3, 4));
    XPoint b = X.canonical(test::random_point(X, rng, 4, 3, 4));
    if (a.piece.parity() == 0 && b.piece.parity() == 0) out.emplace_back(a, b);
  }
  return out;
}

}  // namespace

TEST_CASE("coned piece has one cone vertex per peripheral coset", "[coneoff]") {
  ModelSpace X(test::e1());
  TreeVertex u = X.tree().base_vertex();
  ConedSpace C = build_coned(X, u, ball(2, 3));
  std::set<Word, ShortlexLess> cosets;
  for (const Word& g : ball(2, 3)) cosets.insert(strip_a(g));
  REQUIRE(C.apexes.size() == cosets.size());
  // Every base vertex has one half-edge, to the cone vertex of its coset.
  for (std::size_t i = 0; i < C.base_count; ++i) {
    std::size_t spokes = 0;
    for (auto [v, wt] : C.adj[i]) spokes += C.is_apex(v);
    REQUIRE(spokes == 1);
  }
  for (const Word& g : ball(2, 3)) {
    std::size_t a = *C.node(u, g), b = *C.node(u, strip_a(g));
    auto apex_of = [&](std::size_t id) {
      for (auto [v, wt] : C.adj[id])
        if (C.is_apex(v)) return v;
      return id;
    };
    REQUIRE(apex_of(a) == apex_of(b));
  }
}

TEST_CASE("peripheral shortcuts", "[coneoff]") {
  ModelSpace X(test::e1());
  TreeVertex u = X.tree().base_vertex();
  Word far = power("a", 100), off = multiply(w("b"), power("a", 100));
  ConedSpace C = build_coned(X, u, ModelSpace::hull({Word{}, far, off}, 2, 0));
  REQUIRE(*C.distance(*C.node(u, Word{}), *C.node(u, far)) == 1.0);
  REQUIRE(*C.distance(*C.node(u, Word{}), *C.node(u, off)) == 2.0);
}

TEST_CASE("K-decompositions", "[coneoff]") {
  ModelSpace X(test::e1());
  TreeVertex u = X.tree().base_vertex();
  SECTION("no peripheral edges") {
    Word y = power("ab", 3);
    ConedSpace C = build_coned(X, u, ModelSpace::hull({Word{}, y}, 2, 1));
    ThickResult t = thick_distance(C, *C.node(u, Word{}), *C.node(u, y), 4);
    REQUIRE(t.coned_distance == 6.0);
    KDecomposition d = k_decompose(C, t.path, 4);
    REQUIRE(d.deep.empty());
    REQUIRE(d.thick_norm == 6);
    REQUIRE(t.value == 6);
    REQUIRE(thick_distance(C, *C.node(u, Word{}), *C.node(u, y), 7).value == 0);
  }
  SECTION("a single deep peripheral edge") {
    Word y = power("a", 12);
    ConedSpace C = build_coned(X, u, ModelSpace::hull({Word{}, y}, 2, 1));
    ThickResult t = thick_distance(C, *C.node(u, Word{}), *C.node(u, y), 4);
    REQUIRE(t.path.size() == 3);
    KDecomposition d = k_decompose(C, t.path, 4);
    REQUIRE(d.deep.size() == 1);
    REQUIRE(d.deep[0].base_distance == 12);
    REQUIRE(d.thick_norm == 0);
  }
  SECTION("mixed path") {
    Word y = multiply(multiply(w("b"), power("a", 10)), w("b"));
    ConedSpace C = build_coned(X, u, ModelSpace::hull({Word{}, y}, 2, 1));
    ThickResult t1 = thick_distance(C, *C.node(u, Word{}), *C.node(u, y), 1);
    REQUIRE(t1.coned_distance == 3.0);
    KDecomposition d = k_decompose(C, t1.path, 1);
    REQUIRE(d.segments.size() == 2);
    REQUIRE(d.segments[0].length == 1);
    REQUIRE(d.segments[1].length == 1);
    REQUIRE(d.deep.size() == 1);
    REQUIRE(t1.value == 2);
    REQUIRE(thick_distance(C, *C.node(u, Word{}), *C.node(u, y), 2).value == 0);
    // A peripheral edge of base length at most K stays inside its segment.
    REQUIRE(k_decompose(C, t1.path, 10).segments.size() == 1);
    REQUIRE(k_decompose(C, t1.path, 10).segments[0].length == 3);
  }
  REQUIRE_THROWS_AS(k_decompose(build_coned(X, u, ball(2, 1)), {}, 2), std::invalid_argument);
}

TEST_CASE("thick norm and coned distance properties", "[coneoff][property]") {
  for (auto g : {test::e1(), test::path3()}) {
    ModelSpace X(g);
    TreeVertex u = X.tree().base_vertex();
    const int rank = g.rank(u.vertex);
    ConedSpace C = build_coned(X, u, ball(rank, 4));
    std::mt19937_64 rng(107);
    std::uniform_int_distribution<std::size_t> pick(0, C.base_count - 1);
    for (int i = 0; i < 150; ++i) {
      std::size_t a = pick(rng), b = pick(rng);
      long base = tree_distance(C.ybar(a), C.ybar(b));
      ThickResult t = thick_distance(C, a, b, 3);
      REQUIRE(t.coned_distance <= static_cast<double>(base));
      KDecomposition d = k_decompose(C, t.path, 3);
      REQUIRE(d.length_half == 2 * static_cast<long>(t.coned_distance));
      long len = d.length_half / 2;
      REQUIRE(d.thick_norm <= len);
      if (d.deep.empty() && len >= 3) {
        bool any_peripheral = std::any_of(t.path.begin(), t.path.end(), [&](std::size_t z) { return C.is_apex(z); });
        if (!any_peripheral) REQUIRE(d.thick_norm == len);
      }
      REQUIRE(thick_distance(C, b, a, 3).value == t.value);
      // Segments and deep edges concatenate to the path.
      for (std::size_t k = 0; k + 1 < d.segments.size(); ++k) REQUIRE(d.segments[k + 1].first == d.segments[k].last + 2);
      REQUIRE(d.segments.front().first == 0);
      REQUIRE(d.segments.back().last == t.path.size() - 1);
    }
  }
}

TEST_CASE("sampled thick distance is a lower bound of the exact one", "[coneoff][property]") {
  ModelSpace X(test::e1());
  TreeVertex u = X.tree().base_vertex();
  ConedSpace C = build_coned(X, u, ball(2, 4));
  std::mt19937_64 rng(109);
  std::uniform_int_distribution<std::size_t> pick(0, C.base_count - 1);
  for (int i = 0; i < 60; ++i) {
    std::size_t a = pick(rng), b = pick(rng);
    ThickResult exact = thick_distance(C, a, b, 2);
    ThickResult sampled = thick_distance(C, a, b, 2, 0, 32, 5);
    REQUIRE(exact.mode == ThickMode::Exact);
    REQUIRE((sampled.mode == ThickMode::Sampled || a == b));
    REQUIRE(sampled.value <= exact.value);
  }
}

TEST_CASE("piece cone-off formula examples", "[coneoff]") {
  ModelSpace X(test::e1());
  TreeVertex u = X.tree().base_vertex();
  QuasiLineFamily fam = generate_quasilines(X.graph(), u.vertex, 2);
  std::vector<std::pair<Word, Word>> pairs{{Word{}, Word{}}, {Word{}, power("a", 12)}, {Word{}, power("ab", 3)}};
  ConeoffFit fit = piece_coneoff_fit(X, u, fam, pairs, 4, 1);
  REQUIRE(fit.rows[0].lhs == 0);
  REQUIRE(fit.rhs(fit.rows[0]) == 0);
  // Far apart in one coset: only the boundary-line term.
  REQUIRE(fit.rows[1].thick == 0);
  REQUIRE(fit.rows[1].lines == 12);
  // No deep peripheral travel: the thick distance alone.
  REQUIRE(fit.rows[2].thick == 6);
  REQUIRE(fit.rows[2].lines == 0);
}

TEST_CASE("cone-off formulas are window stable", "[coneoff][property]") {
  for (auto g : {test::e1(), test::path3()}) {
    ModelSpace X(g);
    TreeVertex u = X.tree().base_vertex();
    std::vector<QuasiLineFamily> fams;
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) fams.push_back(generate_quasilines(g, v, 2));
    std::mt19937_64 rng(113);
    std::vector<std::pair<Word, Word>> wp;
    for (int i = 0; i < 100; ++i) {
      std::vector<Word> b = ball(g.rank(u.vertex), 5);
      wp.emplace_back(b[rng() % b.size()], b[rng() % b.size()]);
    }
    ConeoffFit a1 = piece_coneoff_fit(X, u, fams[static_cast<std::size_t>(u.vertex)], wp, 4, 1);
    ConeoffFit a2 = piece_coneoff_fit(X, u, fams[static_cast<std::size_t>(u.vertex)], wp, 4, 2);
    REQUIRE(a1.lower_violations == 0);
    REQUIRE(std::abs(a1.N - a2.N) < 0.1 * a2.N);
    auto xp = even_pairs(X, 127, 40);
    ConeoffFit b1 = global_coneoff_fit(X, 0, xp, 4, 1), b2 = global_coneoff_fit(X, 0, xp, 4, 2);
    REQUIRE(b1.excluded == 0);
    REQUIRE(b1.lower_violations == 0);
    REQUIRE(std::abs(b1.N - b2.N) < 0.1 * b2.N);
    REQUIRE(b1.N_with_tree <= b1.N);
    ConeoffFit c1 = coned_level_fit(X, 0, fams, xp, 4, 1), c2 = coned_level_fit(X, 0, fams, xp, 4, 2);
    REQUIRE(c1.lower_violations == 0);
    REQUIRE(std::abs(c1.N - c2.N) < 0.1 * c2.N);
    PipelineReport p1 = qt_pipeline_check(X, 0, xp, 4, 1), p2 = qt_pipeline_check(X, 0, xp, 4, 2);
    REQUIRE(p1.excluded == 0);
    REQUIRE(std::abs(p1.lambda - p2.lambda) < 0.1 * p2.lambda);
  }
}

TEST_CASE("points on a binding line keep their binding image", "[coneoff]") {
  ModelSpace X(test::e1());
  XPoint x = X.parse_point("1 | 1 | 3");
  GluedTerms t = glued_binding_terms(X, 0, x, x, 2, 4);
  REQUIRE(t.ok);
  REQUIRE(t.distance == 0);
  REQUIRE(binding_quasitree_distance(t) == 0);
}

TEST_CASE("cross-piece projections pass through the apex", "[coneoff][property]") {
  ModelSpace X(test::e1());
  const auto& bs = X.tree();
  TreeVertex u = bs.base_vertex(), u2 = bs.parse_vertex("e.(d,0).e^-1");
  XPoint x{u, w("b"), 0}, y{u2, w("b"), 0};
  std::vector<double> diam;
  for (int pad : {2, 4}) {
    ConedSpace C = coned_corridor(X, 0, x, y, pad);
    double worst = 0;
    for (const char* r : {"ab", "abb", "aab"})
      for (const char* s : {"ab", "bba"})
        worst = std::max(worst, cross_piece_projection(C, u, make_axis(w(r)), u2, make_axis(w(s)), pad));
    diam.push_back(worst);
  }
  REQUIRE(diam[0] == diam[1]);
  REQUIRE(diam[0] <= 4.0);
}
