#pragma once

#include <random>
#include <utility>
#include <vector>

#include "ckaw/model_space.hpp"

namespace ckaw::sample {

// Uniform length in [0, max_len], then uniform signed letters, then free reduction.
inline Word word(std::mt19937_64& rng, int rank, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> gen(1, rank);
  std::bernoulli_distribution sign(0.5);
  std::vector<Letter> raw;
  int n = len(rng);
  for (int i = 0; i < n; ++i) raw.push_back(sign(rng) ? gen(rng) : -gen(rng));
  return reduce(raw, rank);
}

// Random outward walk from the base vertex, coset representatives capped at 3 per edge.
inline TreeVertex vertex(const BassSerre& bs, std::mt19937_64& rng, int max_depth) {
  TreeVertex t = bs.base_vertex();
  int depth = static_cast<int>(rng() % static_cast<unsigned>(max_depth + 1));
  for (int i = 0; i < depth; ++i) {
    auto nb = bs.neighbors(t, 3);
    std::size_t first = t.steps.empty() ? 0 : 1;
    t = nb[first + rng() % (nb.size() - first)];
  }
  return t;
}

inline XPoint point(const ModelSpace& X, std::mt19937_64& rng, int max_depth, int wlen, long hmax) {
  TreeVertex t = vertex(X.tree(), rng, max_depth);
  std::uniform_int_distribution<long> hd(-hmax, hmax);
  return X.canonical(XPoint{t, word(rng, X.graph().rank(t.vertex), wlen), hd(rng)});
}

inline std::vector<std::pair<XPoint, XPoint>> pairs(const ModelSpace& X, std::mt19937_64& rng, std::size_t n,
                                                    int max_depth, int wlen, long hmax) {
  std::vector<std::pair<XPoint, XPoint>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    XPoint x = point(X, rng, max_depth, wlen, hmax);
    out.emplace_back(std::move(x), point(X, rng, max_depth, wlen, hmax));
  }
  return out;
}

// Second point in the piece of the first, fiber within +-hspread.
inline std::pair<XPoint, XPoint> same_piece_pair(const ModelSpace& X, std::mt19937_64& rng, int max_depth, int wlen,
                                                 long hmax, long hspread) {
  XPoint x = point(X, rng, max_depth, wlen, hmax);
  auto c = X.coords_in(x, x.piece);
  std::uniform_int_distribution<long> dh(-hspread, hspread);
  XPoint y = X.canonical(XPoint{x.piece, word(rng, X.graph().rank(x.piece.vertex), wlen), c->second + dh(rng)});
  return {std::move(x), std::move(y)};
}

// Closed syllable walk of `steps` edges and back, with random vertex elements between edges.
inline GroupElement element(const BassSerre& bs, std::mt19937_64& rng, int steps, int word_len = 2, long fiber = 2) {
  const auto& g = bs.graph();
  std::uniform_int_distribution<long> fib(-fiber, fiber);
  std::vector<Syllable> raw;
  std::vector<std::pair<int, int>> walk;
  int cur = g.base;
  auto elem = [&](int v) { raw.push_back(Syllable{false, VertexElement{word(rng, g.rank(v), word_len), fib(rng)}, 0, 1}); };
  for (int i = 0; i < steps; ++i) {
    elem(cur);
    std::vector<std::pair<int, int>> opts;
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      for (int d : {1, -1})
        if (bs.depart(static_cast<int>(e), d) == cur) opts.emplace_back(static_cast<int>(e), d);
    auto [e, d] = opts[std::uniform_int_distribution<std::size_t>(0, opts.size() - 1)(rng)];
    raw.push_back(Syllable{true, {}, e, d});
    walk.emplace_back(e, d);
    cur = bs.arrive(e, d);
  }
  for (auto it = walk.rbegin(); it != walk.rend(); ++it) {
    elem(cur);
    raw.push_back(Syllable{true, {}, it->first, -it->second});
    cur = bs.arrive(it->first, -it->second);
  }
  elem(cur);
  return bs.normalize(raw);
}

}  // namespace ckaw::sample
