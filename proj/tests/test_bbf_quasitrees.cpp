#include <catch_amalgamated.hpp>

#include <random>

#include "ckaw/bbf_quasitrees.hpp"
#include "test_points.hpp"

using namespace ckaw;

namespace {

Word random_reduced(std::mt19937_64& rng, int rank, int len) {
  Word w;
  while (static_cast<int>(w.size()) < len) {
    Letter l = static_cast<Letter>(rng() % rank + 1) * (rng() % 2 ? 1 : -1);
    if (!w.letters.empty() && w.letters.back() == -l) continue;
    w.letters.push_back(l);
  }
  return w;
}

std::vector<std::pair<Word, Word>> random_pairs(std::uint64_t seed, int radius, int n) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Word, Word>> out;
  for (int i = 0; i < n; ++i) {
    int a = static_cast<int>(rng() % (radius + 1)), b = static_cast<int>(rng() % (radius + 1));
    Word x = random_reduced(rng, 2, a);
    out.emplace_back(x, random_reduced(rng, 2, b));
  }
  return out;
}

const Alphabet ab{"ab"};

}  // namespace

TEST_CASE("cutoff", "[bbf]") {
  REQUIRE(cutoff(5, 3) == 5);
  REQUIRE(cutoff(2, 3) == 0);
  REQUIRE(cutoff(7, 7) == 7);
  REQUIRE(cutoff(0, 0) == 0);
  REQUIRE_THROWS_AS(cutoff(1, -1), std::invalid_argument);
}

TEST_CASE("projections between axes", "[bbf]") {
  Axis a = make_axis(parse_word("a", ab)), b = make_axis(parse_word("b", ab));
  REQUIRE(projection_diameter(a, b) == 0);
  Axis shifted = make_axis(parse_word("b", ab), parse_word("a", ab));
  REQUIRE(projection_diameter(b, shifted) <= 1);
  REQUIRE(line_distance(b, shifted) == 1);
  Axis ab_axis = make_axis(parse_word("ab", ab)), abb = make_axis(parse_word("abb", ab));
  REQUIRE(projection_diameter(ab_axis, abb) == 3);  // a, b forwards and B backwards
}

TEST_CASE("quasi-line family generation", "[bbf]") {
  AdmissibleGraph g = test::e1();
  QuasiLineFamily fam = generate_quasilines(g, 0, 1);
  REQUIRE(fam.F.size() == 3);
  REQUIRE(fam.uncovered_h == 0);
  REQUIRE(fam.certified);
  REQUIRE(fam.annulus_size == 4);
  REQUIRE(fam.boundary.size() == 1);
  REQUIRE(fam.is_boundary(parse_word("a", ab)));
  REQUIRE(fam.has_class(class_root(parse_word("ab", ab))));
  REQUIRE(std::is_sorted(fam.classes.begin(), fam.classes.end(), ShortlexLess{}));
  // The triple {ab, bA, abb} leaves words ending in A ... starting with a uncovered.
  QuasiLineFamily alt =
      generate_quasilines(g, 0, 2, {parse_word("ab", ab), parse_word("bA", ab), parse_word("abb", ab)});
  REQUIRE(alt.uncovered_h > 0);
  REQUIRE_THROWS_AS(generate_quasilines(g, 0, 1, {parse_word("ab", ab), parse_word("abab", ab), parse_word("b", ab)}),
                    FamilyError);
  // Class counts do not depend on the annulus orientation of h.
  REQUIRE(generate_quasilines(g, 0, 2).classes.size() == 26);
}

TEST_CASE("lines in a ball", "[bbf]") {
  QuasiLineFamily fam = generate_quasilines(test::e1(), 0, 1);
  auto lines = lines_in_ball(fam, 2);
  REQUIRE(lines.size() == 198);
  for (const Axis& g : lines) REQUIRE(project_to_axis(Word{}, g).distance <= 2);
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) REQUIRE_FALSE(line_less(lines[i + 1], lines[i]));
  for (const Axis& g : lines_through(fam, Word{}))
    REQUIRE(std::any_of(lines.begin(), lines.end(), [&](const Axis& h) { return same_line(g, h); }));
}

TEST_CASE("bounded projections within the family", "[bbf][property]") {
  QuasiLineFamily fam = generate_quasilines(test::e1(), 0, 1);
  for (int W : {2, 3}) {
    auto lines = lines_in_ball(fam, W);
    ProjectionReport rep = bounded_projection_check(lines, 6);
    REQUIRE(rep.pass);
    REQUIRE(rep.max_diameter == 5);
  }
}

TEST_CASE("greedy partition postconditions", "[bbf][property]") {
  QuasiLineFamily fam = generate_quasilines(test::e1(), 0, 1);
  TreeBall B(2, 3);
  auto lines = lines_in_ball(fam, 3);
  long R = covering_radius(B, lines);
  REQUIRE(R == 0);
  for (long D : {1, 2, 3}) {
    auto classes = greedy_partition(B, lines, D, R);
    PartitionCheck chk = verify_partition(B, lines, classes, D, R);
    REQUIRE(chk.ok());
    std::size_t total = 0;
    for (const auto& c : classes) total += c.size();
    REQUIRE(total == lines.size());
  }
  REQUIRE(greedy_partition(B, lines, 2, R).size() == 33);
  // A planted bad partition is caught.
  std::vector<std::vector<std::size_t>> bad{{}};
  for (std::size_t i = 0; i < lines.size(); ++i) bad[0].push_back(i);
  REQUIRE(verify_partition(B, lines, bad, 2, R).separation_violations > 0);
}

TEST_CASE("quasi-tree of one line is the line", "[bbf]") {
  std::vector<Axis> lines{make_axis(parse_word("a", ab))};
  QuasiTree qt = build_quasitree(lines, {0}, 3, 8);
  REQUIRE(qt.node_count == 7);
  REQUIRE(qt.bridges.empty());
  REQUIRE(line_distortion(qt) == 0);
  REQUIRE(bottleneck(qt, 50, 1).delta == 0);
}

TEST_CASE("quasi-tree of two disjoint lines", "[bbf]") {
  std::vector<Axis> lines{make_axis(parse_word("b", ab)), make_axis(parse_word("b", ab), parse_word("aa", ab))};
  QuasiTree qt = build_quasitree(lines, {0, 1}, 4, 8);
  REQUIRE(qt.bridges.size() == 1);
  REQUIRE(qt.components() == 1);
  // From b^2 on the first line to aab^-1 on the second: 2 + 1 + 1.
  auto d = qt.bfs(*qt.node(0, 2));
  REQUIRE(d[*qt.node(1, -1)] == 4);
  REQUIRE(bottleneck(qt, 100, 2).delta <= 1);
}

TEST_CASE("admission blocks pairs separated by a long projection", "[bbf]") {
  // The middle line projects far apart the bridges of the outer lines.
  Axis mid = make_axis(parse_word("a", ab));
  Axis left = make_axis(parse_word("b", ab), parse_word("AAA", ab));
  Axis right = make_axis(parse_word("b", ab), parse_word("aaa", ab));
  std::vector<Axis> lines{left, mid, right};
  REQUIRE(line_projection_gap(mid, left, right) == 6);
  QuasiTree strict = build_quasitree(lines, {0, 1, 2}, 5, 4);
  QuasiTree loose = build_quasitree(lines, {0, 1, 2}, 5, 4, Admission::All);
  REQUIRE(strict.bridges.size() == 2);
  REQUIRE(loose.bridges.size() == 3);
}

TEST_CASE("contributing lines match a brute-force projection oracle", "[bbf][property]") {
  QuasiLineFamily fam = generate_quasilines(test::e1(), 0, 1);
  auto lines = lines_in_ball(fam, 3);
  for (const auto& [x, y] : random_pairs(101, 3, 120)) {
    for (long K : {1L, 2L, 3L}) {
      long oracle = 0;
      for (const Axis& g : lines) {
        long t = std::labs(project_to_axis(x, g).param - project_to_axis(y, g).param);
        oracle += cutoff(t, K);
      }
      REQUIRE(cutoff_sum(fam, x, y, K) == oracle);
    }
  }
}

TEST_CASE("piece distance formula is radius stable", "[bbf][property]") {
  QuasiLineFamily fam = generate_quasilines(test::e1(), 0, 2);
  FormulaFit a = piece_formula_fit(fam, random_pairs(7, 10, 300), 2);
  FormulaFit b = piece_formula_fit(fam, random_pairs(7, 20, 300), 2);
  REQUIRE(a.lower_violations == 0);
  REQUIRE(b.lower_violations == 0);
  REQUIRE(std::abs(a.N - b.N) < 0.1 * b.N);
  for (const auto& r : b.rows) {
    REQUIRE(static_cast<double>(r.sum) <= b.N * static_cast<double>(r.d) + b.N);
    REQUIRE(static_cast<double>(r.d) <= b.N * static_cast<double>(r.sum) + b.N);
  }
}

TEST_CASE("glued distance formula lower envelope", "[bbf][property]") {
  for (auto g : {test::e1(), test::path3()}) {
    ModelSpace X(g);
    std::vector<QuasiLineFamily> fams;
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) fams.push_back(generate_quasilines(g, v, 2));
    std::mt19937_64 rng(103);
    std::vector<std::pair<XPoint, XPoint>> samples;
    for (int i = 0; i < 60; ++i)
      samples.emplace_back(test::random_point(X, rng, 3, 3, 4), test::random_point(X, rng, 3, 3, 4));
    for (int parity : {0, 1}) {
      FormulaFit fit = glued_formula_fit(X, parity, fams, samples, 2, 8);
      REQUIRE(fit.excluded == 0);
      REQUIRE(fit.lower_violations == 0);
      REQUIRE(std::isfinite(fit.N));
    }
  }
}

TEST_CASE("product embedding of a piece", "[bbf][property]") {
  QuasiLineFamily fam = generate_quasilines(test::e1(), 0, 1);
  auto pairs = random_pairs(5, 2, 100);
  ProductEmbedding small = build_product(fam, 2, 2, 24);
  ProductEmbedding big = build_product(fam, 4, 2, 24);
  REQUIRE(small.trees.size() == big.trees.size());
  EmbedFit a = product_fit(small, pairs), b = product_fit(big, pairs);
  REQUIRE(std::abs(a.lambda - b.lambda) < 0.1 * b.lambda);
  for (const auto& [d, s] : b.rows) {
    REQUIRE(static_cast<double>(d) / b.lambda - b.lambda <= static_cast<double>(s));
    REQUIRE(static_cast<double>(s) <= b.lambda * static_cast<double>(d) + b.lambda);
  }
  long delta = 0;
  for (const QuasiTree& qt : big.trees) {
    BottleneckReport r = bottleneck(qt, 20, 9);
    REQUIRE(r.disconnected == 0);
    delta = std::max(delta, r.delta);
  }
  REQUIRE(delta <= 1);
}

TEST_CASE("local finiteness and projection-long translates", "[bbf][property]") {
  QuasiLineFamily fam = generate_quasilines(test::e1(), 0, 1);
  auto l2 = lines_in_ball(fam, 2), l3 = lines_in_ball(fam, 3);
  REQUIRE(local_multiplicity(l2, 2, 1, 6, 2, 50, 3) == local_multiplicity(l3, 2, 1, 6, 2, 50, 3));
  Axis ref = l2.front();
  REQUIRE(long_projection_translates(l3, ref, 6) == 0);
  REQUIRE(long_projection_translates(l2, ref, 6) == 0);
}
