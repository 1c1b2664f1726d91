#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "ckaw/freegroup.hpp"

using namespace ckaw;

namespace {

const Alphabet ab = Alphabet::standard(2);

Word W(std::string_view s) { return parse_word(s, ab); }
std::string S(const Word& w) { return format_word(w, ab); }

// Brute-force nearest vertex of an axis, scanning parameters in [-span, span].
std::pair<Word, long> brute_projection(const Word& x, const Axis& g, long span) {
  Word best;
  long best_p = 0;
  long best_d = -1;
  for (long p = -span; p <= span; ++p) {
    Word v = axis_vertex(g, p);
    long d = tree_distance(x, v);
    if (best_d < 0 || d < best_d) {
      best_d = d;
      best = v;
      best_p = p;
    }
  }
  return {best, best_p};
}

Word random_word(std::mt19937_64& rng, int rank, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> gen(1, rank);
  std::bernoulli_distribution sign(0.5);
  std::vector<Letter> raw;
  int n = len(rng);
  for (int i = 0; i < n; ++i) raw.push_back(sign(rng) ? gen(rng) : -gen(rng));
  return reduce(raw, rank);
}

}  // namespace

TEST_CASE("reduce cancels adjacent inverse pairs", "[freegroup]") {
  std::vector<Letter> raw1{1, 2, -2, 1};
  REQUIRE(S(reduce(raw1, 2)) == "aa");
  REQUIRE(reduce(std::vector<Letter>{}, 2).empty());
  std::vector<Letter> raw3{1, 2, -1, 1, -2};
  REQUIRE(S(reduce(raw3, 2)) == "a");
  std::vector<Letter> bad{3};
  REQUIRE_THROWS_AS(reduce(bad, 2), MalformedInput);
  REQUIRE_THROWS_AS(parse_word("abx", ab), MalformedInput);
}

TEST_CASE("parse and format round trip", "[freegroup]") {
  for (std::string s : {"1", "a", "AbBa", "abAB", "cdC"}) {
    Alphabet a4 = Alphabet::standard(4);
    Word w = parse_word(s, a4);
    REQUIRE(parse_word(format_word(w, a4), a4) == w);
  }
  Alphabet cd{"cd"};
  REQUIRE(format_word(parse_word("cD", cd), cd) == "cD");
}

TEST_CASE("primitive roots", "[freegroup]") {
  auto r = primitive_root(W("abab"));
  REQUIRE(S(r.root) == "ab");
  REQUIRE(r.power == 2);
  r = primitive_root(W("a"));
  REQUIRE(S(r.root) == "a");
  REQUIRE(r.power == 1);
  // b a b^-1: brute force over rotations of the cyclic reduction gives root a, conjugator b.
  r = primitive_root(W("baB"));
  REQUIRE(S(r.root) == "a");
  REQUIRE(r.power == 1);
  REQUIRE(S(r.conjugator) == "b");
  REQUIRE(multiply(multiply(r.conjugator, power(r.root, r.power)), inverse(r.conjugator)) == W("baB"));
  REQUIRE_THROWS_AS(primitive_root(Word{}), NoRoot);
}

TEST_CASE("primitive roots reproduce the word", "[freegroup][property]") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    Word w = random_word(rng, 3, 10);
    if (w.empty()) continue;
    auto r = primitive_root(w);
    REQUIRE(is_cyclically_reduced(r.root));
    REQUIRE(primitive_root(r.root).power == 1);
    REQUIRE(multiply(multiply(r.conjugator, power(r.root, r.power)), inverse(r.conjugator)) == w);
  }
}

TEST_CASE("independence by rotation test", "[freegroup]") {
  auto a = primitive_root(W("a"));
  auto b = primitive_root(W("b"));
  REQUIRE(independent(a, b));
  // Brute-force conjugacy search over the radius-4 ball agrees.
  bool conj = false;
  for (const Word& g : ball(2, 4)) {
    Word c = multiply(multiply(g, W("a")), inverse(g));
    if (c == W("b") || c == W("B")) conj = true;
  }
  REQUIRE_FALSE(conj);

  REQUIRE_FALSE(independent(a, primitive_root(W("baB"))));
  REQUIRE_FALSE(independent(primitive_root(W("ab")), primitive_root(W("BA"))));
  REQUIRE_FALSE(independent(primitive_root(W("ab")), primitive_root(W("ba"))));
  REQUIRE(independent(primitive_root(W("ab")), primitive_root(W("aB"))));
}

TEST_CASE("projection to an axis", "[freegroup]") {
  Axis ga = make_axis(W("a"));
  auto p = project_to_axis(W("b"), ga);
  REQUIRE(p.point.empty());
  REQUIRE(p.param == 0);
  auto q = project_to_axis(W("aaab"), ga);
  REQUIRE(S(q.point) == "aaa");
  REQUIRE(q.param == 3);
  Word on = axis_vertex(ga, 7);
  REQUIRE(project_to_axis(on, ga).param == 7);
  REQUIRE(project_to_axis(on, ga).point == on);

  REQUIRE(d_gamma(ga, W("baaa"), W("B")) == 0);
  REQUIRE(d_gamma(ga, W("AAb"), W("aaaaa")) == 7);
  REQUIRE(d_gamma(ga, W("ab"), W("ab")) == 0);
}

TEST_CASE("projection agrees with brute force", "[freegroup][property]") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    Word root = random_word(rng, 2, 4);
    if (root.empty()) continue;
    Axis g = make_axis(root, random_word(rng, 2, 4));
    Word x = random_word(rng, 2, 8);
    auto fast = project_to_axis(x, g);
    auto slow = brute_projection(x, g, 40);
    REQUIRE(fast.point == slow.first);
    REQUIRE(fast.param == slow.second);
  }
}

TEST_CASE("projection invariants", "[freegroup][property]") {
  std::mt19937_64 rng(5);
  int checked = 0;
  while (checked < 1000) {
    Word root = random_word(rng, 2, 3);
    if (root.empty()) continue;
    Axis g = make_axis(root, random_word(rng, 2, 3));
    Word x = random_word(rng, 2, 9);
    Word y = random_word(rng, 2, 9);
    REQUIRE(d_gamma(g, x, y) <= tree_distance(x, y));
    auto p = project_to_axis(x, g);
    REQUIRE(project_to_axis(p.point, g).point == p.point);
    ++checked;
  }
}

TEST_CASE("Cayley trees are 0-hyperbolic", "[freegroup][property]") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    Word w[4];
    for (auto& v : w) v = random_word(rng, 2, 8);
    long s1 = tree_distance(w[0], w[1]) + tree_distance(w[2], w[3]);
    long s2 = tree_distance(w[0], w[2]) + tree_distance(w[1], w[3]);
    long s3 = tree_distance(w[0], w[3]) + tree_distance(w[1], w[2]);
    std::vector<long> s{s1, s2, s3};
    std::sort(s.begin(), s.end());
    REQUIRE(s[2] == s[1]);
  }
}

TEST_CASE("bounded projection between independent axes stabilises", "[freegroup][property]") {
  Axis gu = make_axis(W("ab"));
  Axis gv = make_axis(W("aB"), W("b"));
  std::vector<long> diam;
  for (long r : {10, 20, 40}) {
    long lo = 0, hi = 0;
    bool first = true;
    for (long t = -r; t <= r; ++t) {
      long p = axis_param(gu, axis_vertex(gv, t));
      if (first) lo = hi = p;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
      first = false;
    }
    diam.push_back(hi - lo);
  }
  REQUIRE(diam[0] == diam[1]);
  REQUIRE(diam[1] == diam[2]);
}

TEST_CASE("axis canonical form", "[freegroup]") {
  Axis g = make_axis(W("a"), W("aab"));
  REQUIRE(S(g.base) == "aab");
  Axis h = make_axis(W("a"), W("aaa"));
  REQUIRE(h.base.empty());
  REQUIRE(same_line(make_axis(W("ab")), make_axis(W("BA"))));
  REQUIRE(same_line(make_axis(W("ab")), make_axis(W("ba"), W("B"))));
  REQUIRE_FALSE(same_line(make_axis(W("ab")), make_axis(W("ba"))));
}

TEST_CASE("bridges between axes", "[freegroup]") {
  // Axes of a and b both pass through the identity.
  Bridge b0 = bridge(make_axis(W("a")), make_axis(W("b")));
  REQUIRE(b0.width == 0);
  REQUIRE(b0.on_a.empty());
  // Axes of a and b a^2 b^-1 = b * axis(a): bridge from 1 to b.
  Bridge b1 = bridge(make_axis(W("a")), make_axis(W("baaB")));
  REQUIRE(b1.width == 1);
  REQUIRE(b1.on_a.empty());
  REQUIRE(S(b1.on_b) == "b");
  REQUIRE(overlap_length(make_axis(W("ab")), make_axis(W("aB"))) == 1);
}
