#ifndef CKAW_CONFIG_HPP
#define CKAW_CONFIG_HPP

// Instance loader. Requires yaml-cpp.
//
//   name: E1
//   base: u                      # optional, defaults to the first vertex
//   vertices:
//     - {id: u, rank: 2, letters: ab}   # letters optional, default a, b, c, ...
//     - {id: w, rank: 2, letters: cd}
//   edges:
//     - id: e
//       from: u
//       to: w
//       words: [a, c]            # lowercase generator, uppercase inverse
//       offsets: [0, 0]          # optional
//       signs: [1, 1]            # optional, each +1 or -1

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "ckaw/admissible.hpp"

namespace ckaw {

class ConfigError : public MalformedInput {
 public:
  using MalformedInput::MalformedInput;
};

namespace detail {

inline std::string where(const std::string& src, const YAML::Node& n) {
  auto m = n.Mark();
  if (m.line < 0) return src + ": ";
  return src + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1) + ": ";
}

inline void allow_keys(const std::string& src, const YAML::Node& n, std::set<std::string> keys) {
  if (!n.IsMap()) throw ConfigError(where(src, n) + "expected a mapping");
  for (auto it = n.begin(); it != n.end(); ++it) {
    auto k = it->first.as<std::string>();
    if (!keys.count(k)) throw ConfigError(where(src, it->first) + "unknown key '" + k + "'");
  }
}

inline YAML::Node need(const std::string& src, const YAML::Node& n, const std::string& key) {
  YAML::Node v = n[key];
  if (!v) throw ConfigError(where(src, n) + "missing key '" + key + "'");
  return v;
}

template <class T>
T scalar(const std::string& src, const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw ConfigError(where(src, n) + what + " must be a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(src, n) + "bad value for " + what + ": '" + n.Scalar() + "'");
  }
}

template <class T>
std::array<T, 2> pair_of(const std::string& src, const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() != 2) throw ConfigError(where(src, n) + what + " must be a pair");
  return {scalar<T>(src, n[0], what), scalar<T>(src, n[1], what)};
}

}  // namespace detail

inline AdmissibleGraph parse_instance(const std::string& text, const std::string& src = "<instance>") {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(src + ":" + std::to_string(e.mark.line + 1) + ":" +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  allow_keys(src, root, {"name", "base", "vertices", "edges"});
  AdmissibleGraph g;
  if (root["name"]) g.name = scalar<std::string>(src, root["name"], "name");

  YAML::Node vs = need(src, root, "vertices");
  if (!vs.IsSequence() || vs.size() == 0) throw ConfigError(where(src, vs) + "vertices must be a nonempty list");
  for (const auto& v : vs) {
    allow_keys(src, v, {"id", "rank", "letters"});
    VertexSpec spec;
    spec.id = scalar<std::string>(src, need(src, v, "id"), "id");
    spec.rank = scalar<int>(src, need(src, v, "rank"), "rank");
    if (spec.rank < 1 || spec.rank > 26) throw ConfigError(where(src, v["rank"]) + "rank out of range");
    if (g.vertex_index(spec.id) >= 0) throw ConfigError(where(src, v["id"]) + "duplicate vertex '" + spec.id + "'");
    if (v["letters"]) {
      spec.alphabet.letters = scalar<std::string>(src, v["letters"], "letters");
      const auto& L = spec.alphabet.letters;
      bool ok = static_cast<int>(L.size()) == spec.rank &&
                std::set<char>(L.begin(), L.end()).size() == L.size() &&
                std::all_of(L.begin(), L.end(), [](char c) { return c >= 'a' && c <= 'z'; });
      if (!ok) throw ConfigError(where(src, v["letters"]) + "letters must be rank distinct lowercase letters");
    } else {
      spec.alphabet = Alphabet::standard(spec.rank);
    }
    g.vertices.push_back(spec);
  }

  YAML::Node es = need(src, root, "edges");
  if (!es.IsSequence()) throw ConfigError(where(src, es) + "edges must be a list");
  for (const auto& e : es) {
    allow_keys(src, e, {"id", "from", "to", "words", "offsets", "signs"});
    EdgeSpec spec;
    spec.id = scalar<std::string>(src, need(src, e, "id"), "id");
    if (g.edge_index(spec.id) >= 0) throw ConfigError(where(src, e["id"]) + "duplicate edge '" + spec.id + "'");
    if (spec.id.find_first_of("().^ ") != std::string::npos || spec.id == "1") {
      throw ConfigError(where(src, e["id"]) + "edge id may not contain ( ) . ^ or spaces");
    }
    for (const char* end : {"from", "to"}) {
      YAML::Node n = need(src, e, end);
      int idx = g.vertex_index(scalar<std::string>(src, n, end));
      if (idx < 0) throw ConfigError(where(src, n) + "unknown vertex '" + n.Scalar() + "'");
      (std::string(end) == "from" ? spec.from : spec.to) = idx;
    }
    auto words = pair_of<std::string>(src, need(src, e, "words"), "words");
    try {
      spec.word_from = parse_word(words[0], g.alphabet(spec.from));
      spec.word_to = parse_word(words[1], g.alphabet(spec.to));
    } catch (const MalformedInput& m) {
      throw ConfigError(where(src, e["words"]) + m.what());
    }
    if (e["offsets"]) spec.offsets = pair_of<long>(src, e["offsets"], "offsets");
    if (e["signs"]) {
      spec.signs = pair_of<int>(src, e["signs"], "signs");
      for (int s : spec.signs) {
        if (s != 1 && s != -1) throw ConfigError(where(src, e["signs"]) + "signs must be +1 or -1");
      }
    }
    g.edges.push_back(spec);
  }
  if (root["base"]) {
    g.base = g.vertex_index(scalar<std::string>(src, root["base"], "base"));
    if (g.base < 0) throw ConfigError(where(src, root["base"]) + "unknown base vertex");
  }
  return g;
}

inline AdmissibleGraph load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open instance file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str(), path);
}

}  // namespace ckaw

#endif
