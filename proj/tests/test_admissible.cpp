#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "ckaw/admissible.hpp"
#include "ckaw/config.hpp"
#include "test_instances.hpp"

using namespace ckaw;

TEST_CASE("E1 is admissible", "[admissible]") {
  AdmissibleGraph g = test::e1();
  auto rep = validate_admissible(g);
  REQUIRE(rep.ok());
  REQUIRE(rep.edge_group_condition_automatic);
}

TEST_CASE("conjugate edge words are reported", "[admissible]") {
  AdmissibleGraph g;
  g.vertices = {{"u", 2, Alphabet{"ab"}}, {"w", 2, Alphabet{"cd"}}};
  Alphabet ab{"ab"}, cd{"cd"};
  g.edges.push_back({"e1", 0, 1, parse_word("a", ab), parse_word("c", cd), {0, 0}, {1, 1}});
  g.edges.push_back({"e2", 0, 1, parse_word("bAB", ab), parse_word("d", cd), {0, 0}, {1, 1}});
  auto rep = validate_admissible(g);
  REQUIRE_FALSE(rep.ok());
  bool pair = std::any_of(rep.issues.begin(), rep.issues.end(), [](const ValidationIssue& i) {
    return i.kind == IssueKind::DependentPair && i.vertex == "u";
  });
  REQUIRE(pair);
}

TEST_CASE("non-primitive edge word is reported", "[admissible]") {
  AdmissibleGraph g = test::e1();
  g.edges[0].word_from = parse_word("abab", g.alphabet(0));
  auto rep = validate_admissible(g);
  REQUIRE(rep.issues.size() == 1);
  REQUIRE(rep.issues[0].kind == IssueKind::NotPrimitive);
  REQUIRE(rep.issues[0].words[0] == "abab");
}

TEST_CASE("structural violations throw", "[admissible]") {
  AdmissibleGraph g = test::e1();
  g.vertices[1].rank = 1;
  REQUIRE_THROWS_AS(validate_admissible(g), AdmissibilityError);
  AdmissibleGraph h = test::e1();
  h.edges.clear();
  REQUIRE_THROWS_AS(validate_admissible(h), AdmissibilityError);
}

TEST_CASE("validation is order independent", "[admissible][property]") {
  AdmissibleGraph g;
  g.vertices = {{"u", 2, Alphabet{"ab"}}, {"w", 2, Alphabet{"cd"}}};
  Alphabet ab{"ab"}, cd{"cd"};
  std::vector<std::pair<std::string, std::string>> words{{"a", "c"}, {"b", "d"}, {"ab", "cd"}, {"BA", "cD"},
                                                         {"aab", "dc"}};
  for (std::size_t i = 0; i < words.size(); ++i) {
    g.edges.push_back({"e" + std::to_string(i), 0, 1, parse_word(words[i].first, ab),
                       parse_word(words[i].second, cd), {0, 0}, {1, 1}});
  }
  auto ref = validate_admissible(g).issues;
  REQUIRE_FALSE(ref.empty());
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(g.edges.begin(), g.edges.end(), rng);
    REQUIRE(validate_admissible(g).issues == ref);
  }
}

TEST_CASE("flip transfer", "[admissible]") {
  AdmissibleGraph g = test::e1();
  REQUIRE(flip_transfer(g, {0, 3, 5}, Side::From) == PlaneCoord{0, 5, 3});
  g.edges[0].signs = {-1, 1};
  g.edges[0].offsets = {1, 0};
  // fiber_to = -s + 1 = 1, axis_to = t + 0 = 0.
  REQUIRE(flip_transfer(g, {0, 0, 0}, Side::From) == PlaneCoord{0, 0, 1});
  REQUIRE(flip_transfer(g, {0, 0, 1}, Side::To) == PlaneCoord{0, 0, 0});
  REQUIRE_THROWS_AS(flip_transfer(g, {7, 0, 0}, Side::From), UnknownEdge);
}

TEST_CASE("flip transfer is an L1 isometric involution", "[admissible][property]") {
  AdmissibleGraph g = test::e1();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<long> c(-50, 50);
  std::uniform_int_distribution<int> sg(0, 1);
  for (int i = 0; i < 100; ++i) {
    g.edges[0].signs = {sg(rng) ? 1 : -1, sg(rng) ? 1 : -1};
    g.edges[0].offsets = {c(rng), c(rng)};
    for (Side side : {Side::From, Side::To}) {
      PlaneCoord p{0, c(rng), c(rng)}, q{0, c(rng), c(rng)};
      PlaneCoord p2 = flip_transfer(g, p, side), q2 = flip_transfer(g, q, side);
      REQUIRE(flip_transfer(g, p2, other(side)) == p);
      REQUIRE(std::labs(p.s - q.s) + std::labs(p.t - q.t) == std::labs(p2.s - q2.s) + std::labs(p2.t - q2.t));
    }
  }
}

TEST_CASE("instance loader", "[config]") {
  AdmissibleGraph g = load_instance(std::string(CKAW_INSTANCES_DIR) + "/e1.yaml");
  REQUIRE(g.vertices.size() == 2);
  REQUIRE(format_word(g.edges[0].word_to, g.alphabet(1)) == "c");
  AdmissibleGraph p = load_instance(std::string(CKAW_INSTANCES_DIR) + "/path3.yaml");
  REQUIRE(p.edges[1].signs[0] == -1);
  REQUIRE(validate_admissible(p).ok());
}

TEST_CASE("instance loader reports line numbers", "[config]") {
  std::string bad =
      "vertices:\n"
      "  - {id: u, rank: 2}\n"
      "edges:\n"
      "  - id: e\n"
      "    from: u\n"
      "    to: u\n"
      "    words: [a, x]\n";
  try {
    parse_instance(bad, "t.yaml");
    FAIL("expected error");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).rfind("t.yaml:7:", 0) == 0);
  }
  REQUIRE_THROWS_AS(parse_instance("vertices: []\nedges: []\nbogus: 1\n"), ConfigError);
  REQUIRE_THROWS_AS(load_instance("/nonexistent.yaml"), ConfigError);
}
