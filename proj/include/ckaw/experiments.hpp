#pragma once

// Experiment runners shared by the command line tool and the acceptance gate.
// Requires yaml-cpp (instance files) and nlohmann/json (reports).

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ckaw/coneoff.hpp"
#include "ckaw/config.hpp"
#include "ckaw/sampling.hpp"
#include "ckaw/subgroups.hpp"

namespace ckaw::exp {

using Json = nlohmann::ordered_json;

// Bad flags, unreadable files, malformed points or words: exit status 2.
class InputError : public std::runtime_error {
 public:
  InputError(std::string kind, const std::string& msg) : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct ExperimentConfig {
  std::string instance;
  std::optional<int> radius;
  std::optional<long> K;
  std::optional<long> D;
  std::optional<long> theta;
  std::optional<std::size_t> samples;
  std::uint64_t seed = 1;
  std::string out = "ckaw-out";
  unsigned threads = 0;  // 0: hardware concurrency

  // sampling of model-space points
  int depth = 3;
  int word_length = 3;
  long height = 4;

  // subcommand parameters
  std::string variant = "piece";  // distance-formula: piece, x1, coneoff
  std::string mode = "morse";     // subgroup: morse, core, contract, height
  int parity = 0;
  std::string vertex;             // vertex id, default the base vertex
  std::optional<long> k_tilde;
  std::optional<int> pad;
  std::optional<int> window;
  std::optional<int> length;
  long c_max = 20;
  std::vector<std::string> generators;
  std::vector<std::string> elements;
  std::optional<std::string> from, to;
};

struct Table {
  std::string name;  // empty for the main table
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::string command;
  Json config;
  Json summary;
  std::vector<Table> tables;
  bool pass = true;
};

// ---- formatting ----------------------------------------------------------------------

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
inline std::string num(long v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }
inline double round6(double v) { return std::stod(num(v)); }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline std::string to_csv(const Table& t, std::uint64_t seed) {
  std::ostringstream os;
  os << "seed";
  for (const auto& c : t.columns) os << ',' << csv_field(c);
  os << '\n';
  for (const auto& r : t.rows) {
    os << seed;
    for (const auto& f : r) os << ',' << csv_field(f);
    os << '\n';
  }
  return os.str();
}

inline std::string file_stem(const Report& r, const Table& t) {
  return t.name.empty() ? r.command : r.command + "_" + t.name;
}

inline Json report_json(const Report& r) {
  Json j;
  j["command"] = r.command;
  j["seed"] = r.config.value("seed", 0ULL);
  j["config"] = r.config;
  j["pass"] = r.pass;
  j["summary"] = r.summary;
  Json files = Json::array();
  for (const auto& t : r.tables) files.push_back(file_stem(r, t) + ".csv");
  j["tables"] = files;
  return j;
}

// Writes <out>/<command>.json and one CSV per table.
inline void write_report(const Report& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("output", dir + ": " + ec.message());
  auto put = [&](const std::string& name, const std::string& body) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw InputError("output", dir + "/" + name + ": cannot write");
    f << body;
  };
  put(r.command + ".json", report_json(r).dump(2) + "\n");
  std::uint64_t seed = r.config.value("seed", 0ULL);
  for (const auto& t : r.tables) put(file_stem(r, t) + ".csv", to_csv(t, seed));
}

// ---- schema ----------------------------------------------------------------------------

struct ColumnDoc {
  std::string name;
  std::string doc;
};

struct TableDoc {
  std::string command;
  std::string table;
  std::vector<ColumnDoc> columns;
};

inline const std::vector<TableDoc>& schema() {
  static const std::vector<TableDoc> docs = {
      {"validate", "", {{"kind", "violation kind"}, {"vertex", "vertex id"}, {"edge_ends", "edge ends involved, edge:from or edge:to"}, {"words", "offending words"}}},
      {"special-path", "query",
       {{"from", "first point, coset | word | h"}, {"to", "second point"}, {"special", "special path length"},
        {"distance", "exact model-space distance"}, {"oracle", "BFS distance in a corridor window, -1 if the window is too small"},
        {"ratio", "special / oracle, 1 when oracle is 0"}, {"corners", "number of corners"}}},
      {"special-path", "",
       {{"id", "pair index"}, {"oracle", "BFS distance in the corridor window"}, {"special", "special path length"},
        {"ratio", "special / oracle, 1 when oracle is 0"}, {"same_piece", "1 if both points lie in one piece"}}},
      {"distance-formula", "piece",
       {{"id", "pair index"}, {"d", "Cayley tree distance"}, {"sum", "cutoff sum over family lines"}}},
      {"distance-formula", "x1",
       {{"id", "pair index"}, {"d", "glued-space distance"}, {"sum", "cutoff sums over pieces and binding lines"},
        {"d_tree", "Bass-Serre tree distance"}, {"truncated", "1 if the geodesic touched the window boundary"}}},
      {"distance-formula", "coneoff",
       {{"formula", "piece, global or coned"}, {"id", "pair index"}, {"lhs", "left side distance"},
        {"thick", "thick distance d^K"}, {"lines", "cutoff sum over the relevant lines"}, {"d_tree", "Bass-Serre tree distance"},
        {"rhs", "right side of the fitted formula"}, {"sampled", "1 if d^K used sampled geodesics"}}},
      {"partition", "",
       {{"class", "class index"}, {"line", "line index in the window"}, {"axis", "base * <root>"}, {"coverage", "max over window vertices of the distance to the class"}}},
      {"quasitree", "",
       {{"class", "class index"}, {"lines", "lines in the class"}, {"nodes", "quasi-tree nodes"}, {"bridges", "bridge edges"},
        {"components", "connected components"}, {"delta", "bottleneck constant"}, {"pairs", "sampled node pairs"},
        {"line_distortion", "max excess of quasi-tree over line distance along one line"}}},
      {"embed", "phi",
       {{"id", "pair index"}, {"d_x", "model-space distance"}, {"d_1", "distance in the even glued space"},
        {"d_2", "distance in the odd glued space"}, {"same_piece", "1 if both points lie in one piece"}}},
      {"embed", "product", {{"id", "pair index"}, {"d", "Cayley tree distance"}, {"image", "sum of class quasi-tree distances"}}},
      {"coneoff-pipeline", "",
       {{"id", "pair index"}, {"d_x", "glued-space distance"}, {"thick", "thick distance d^K"},
        {"d_c", "binding quasi-tree distance"}, {"image", "thick + d_c"}}},
      {"subgroup", "morse",
       {{"element", "group element"}, {"translation_length", "translation length on the Bass-Serre tree"}, {"morse", "1 if Morse"}}},
      {"subgroup", "core",
       {{"word", "generator word"}, {"point", "orbit point"}, {"tree_vertex", "rho of the orbit point"}}},
      {"subgroup", "contract",
       {{"C", "tested constant"}, {"tested", "pairs with projections at least C apart"}, {"violations_1", "core points farther than C from their projection"},
        {"violations_2", "special paths avoiding a projection ball"}}},
      {"subgroup", "height",
       {{"conjugator", "essentially distinct conjugator in the witnessed family"}}},
  };
  return docs;
}

inline Json schema_json() {
  Json j = Json::array();
  for (const auto& t : schema()) {
    Json cols = Json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"doc", c.doc}});
    j.push_back({{"command", t.command}, {"table", t.table}, {"columns", cols}});
  }
  return j;
}

// ---- worker pool -----------------------------------------------------------------------

// f(i) for i < n on a pool of workers; results are stored by index.
template <class F>
auto parallel_map(std::size_t n, unsigned threads, F f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (err) std::rethrow_exception(err);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---- shared setup ----------------------------------------------------------------------

struct Context {
  AdmissibleGraph graph;
  std::unique_ptr<ModelSpace> X;
  int vertex = 0;
};

inline Context load_context(const ExperimentConfig& cfg, bool require_admissible = true) {
  if (cfg.instance.empty()) throw InputError("usage", "--instance is required");
  if (!std::filesystem::exists(cfg.instance)) throw InputError("missing-instance", cfg.instance + ": no such file");
  Context ctx;
  try {
    ctx.graph = load_instance(cfg.instance);
  } catch (const MalformedInput& e) {
    throw InputError("config", e.what());
  }
  if (require_admissible) {
    ValidationReport rep = validate_admissible(ctx.graph);
    if (!rep.ok()) throw InputError("not-admissible", cfg.instance + ": instance fails admissibility, run validate");
  }
  try {
    ctx.X = std::make_unique<ModelSpace>(ctx.graph);
  } catch (const AdmissibilityError& e) {
    throw InputError("not-admissible", e.what());
  }
  ctx.vertex = ctx.graph.base;
  if (!cfg.vertex.empty()) {
    ctx.vertex = ctx.graph.vertex_index(cfg.vertex);
    if (ctx.vertex < 0) throw InputError("usage", "unknown vertex " + cfg.vertex);
  }
  return ctx;
}

inline void positive(const char* flag, long v) {
  if (v <= 0) throw InputError("usage", std::string(flag) + " must be positive");
}

inline Json base_config(const ExperimentConfig& cfg, const std::string& command) {
  Json j;
  j["command"] = command;
  j["instance"] = cfg.instance;
  j["seed"] = cfg.seed;
  return j;
}

inline std::vector<std::pair<XPoint, XPoint>> sample_pairs(const ModelSpace& X, const ExperimentConfig& cfg,
                                                           std::size_t n, std::uint64_t salt = 0) {
  std::mt19937_64 rng(cfg.seed + salt);
  return sample::pairs(X, rng, n, cfg.depth, cfg.word_length, cfg.height);
}

inline std::vector<std::pair<XPoint, XPoint>> parity_pairs(const ModelSpace& X, const ExperimentConfig& cfg,
                                                           std::size_t n, int parity) {
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::pair<XPoint, XPoint>> out;
  while (out.size() < n) {
    XPoint a = sample::point(X, rng, cfg.depth + 1, cfg.word_length, cfg.height);
    XPoint b = sample::point(X, rng, cfg.depth + 1, cfg.word_length, cfg.height);
    if (a.piece.parity() == parity && b.piece.parity() == parity) out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

// Uniform word lengths in [0, radius], then uniform reduced words of that length.
inline std::vector<std::pair<Word, Word>> word_pairs(int rank, int radius, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto word = [&](int len) {
    Word w;
    while (static_cast<int>(w.size()) < len) {
      Letter l = static_cast<Letter>(rng() % static_cast<unsigned>(rank) + 1) * (rng() % 2 ? 1 : -1);
      if (!w.letters.empty() && w.letters.back() == -l) continue;
      w.letters.push_back(l);
    }
    return w;
  };
  std::vector<std::pair<Word, Word>> out;
  for (std::size_t i = 0; i < n; ++i) {
    int a = static_cast<int>(rng() % static_cast<unsigned>(radius + 1));
    int b = static_cast<int>(rng() % static_cast<unsigned>(radius + 1));
    Word x = word(a);
    out.emplace_back(x, word(b));
  }
  return out;
}

inline std::string format_axis(const Axis& a, const Alphabet& alpha) {
  return format_word(a.base, alpha) + "*<" + format_word(a.root(), alpha) + ">";
}

inline std::vector<QuasiLineFamily> families(const AdmissibleGraph& g, long k_tilde) {
  std::vector<QuasiLineFamily> fams;
  for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) fams.push_back(generate_quasilines(g, v, k_tilde));
  return fams;
}

// ---- validate --------------------------------------------------------------------------

inline Report run_validate(const ExperimentConfig& cfg) {
  Context ctx = load_context(cfg, false);
  Report r{"validate", base_config(cfg, "validate"), {}, {}, true};
  ValidationReport rep = validate_admissible(ctx.graph);
  Table t{"", {"kind", "vertex", "edge_ends", "words"}, {}};
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
    return s;
  };
  Json issues = Json::array();
  for (const auto& i : rep.issues) {
    t.rows.push_back({to_string(i.kind), i.vertex, join(i.edge_ends), join(i.words)});
    issues.push_back({{"kind", to_string(i.kind)}, {"vertex", i.vertex}, {"edge_ends", i.edge_ends}, {"words", i.words}});
  }
  r.summary["name"] = ctx.graph.name;
  r.summary["vertices"] = ctx.graph.vertices.size();
  r.summary["edges"] = ctx.graph.edges.size();
  r.summary["violations"] = issues;
  r.summary["edge_group_condition_automatic"] = rep.edge_group_condition_automatic;
  r.pass = rep.ok();
  r.tables.push_back(std::move(t));
  return r;
}

// ---- special paths ---------------------------------------------------------------------

struct QgSummary {
  QgFit fit;
  std::vector<bool> same_piece;
};

inline QgSummary special_path_batch(const ModelSpace& X, const std::vector<std::pair<XPoint, XPoint>>& pairs, long radius,
                                    unsigned threads) {
  auto parts = parallel_map(pairs.size(), threads, [&](std::size_t i) { return qg_fit(X, {pairs[i]}, radius); });
  QgSummary s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const QgFit& p = parts[i];
    s.fit.excluded += p.excluded;
    for (QgRow row : p.rows) {
      row.id = i;
      s.fit.mu_mult = std::max(s.fit.mu_mult, row.ratio);
      s.fit.mu_add = std::max(s.fit.mu_add, row.special - row.oracle);
      s.fit.histogram[std::floor(row.ratio * 10.0) / 10.0]++;
      s.fit.rows.push_back(row);
      s.same_piece.push_back(X.coords_in(pairs[i].second, X.canonical(pairs[i].first).piece).has_value());
    }
  }
  return s;
}

inline Report run_special_path(const ExperimentConfig& cfg) {
  Context ctx = load_context(cfg);
  const ModelSpace& X = *ctx.X;
  const long radius = cfg.radius.value_or(8);
  const std::size_t n = cfg.samples.value_or(200);
  positive("--radius", radius);
  Report r{"special-path", base_config(cfg, "special-path"), {}, {}, true};
  r.config["radius"] = radius;
  if (cfg.from || cfg.to) {
    if (!cfg.from || !cfg.to) throw InputError("usage", "--from and --to go together");
    XPoint x, y;
    try {
      x = X.canonical(X.parse_point(*cfg.from));
      y = X.canonical(X.parse_point(*cfg.to));
    } catch (const std::exception& e) {
      throw InputError("malformed-point", e.what());
    }
    r.config["from"] = *cfg.from;
    r.config["to"] = *cfg.to;
    SpecialPath sp = special_path(X, x, y);
    auto o = X.oracle_distance(x, y, radius);
    long oracle = o.value_or(-1);
    double ratio = oracle > 0 ? static_cast<double>(sp.length()) / static_cast<double>(oracle) : 1.0;
    r.tables.push_back({"query", {"from", "to", "special", "distance", "oracle", "ratio", "corners"},
                        {{X.format(x), X.format(y), num(sp.length()), num(X.distance(x, y)), num(oracle), num(ratio),
                          num(sp.corners.size())}}});
    r.summary["special"] = sp.length();
    r.summary["oracle"] = oracle;
    r.summary["ratio"] = round6(ratio);
    r.pass = o.has_value() && sp.length() >= *o;
    return r;
  }
  positive("--samples", static_cast<long>(n));
  r.config["samples"] = n;
  r.config["depth"] = cfg.depth;
  QgSummary s = special_path_batch(X, sample_pairs(X, cfg, n), radius, cfg.threads);
  Table t{"", {"id", "oracle", "special", "ratio", "same_piece"}, {}};
  std::size_t below = 0, same_off = 0;
  for (std::size_t k = 0; k < s.fit.rows.size(); ++k) {
    const QgRow& row = s.fit.rows[k];
    below += row.special < row.oracle;
    same_off += s.same_piece[k] && row.special != row.oracle;
    t.rows.push_back({num(row.id), num(row.oracle), num(row.special), num(row.ratio), s.same_piece[k] ? "1" : "0"});
  }
  Json hist = Json::object();
  for (const auto& [b, c] : s.fit.histogram) hist[num(b)] = c;
  r.summary["mu"] = round6(s.fit.mu_mult);
  r.summary["mu_additive"] = s.fit.mu_add;
  r.summary["rows"] = s.fit.rows.size();
  r.summary["excluded"] = s.fit.excluded;
  r.summary["shorter_than_oracle"] = below;
  r.summary["same_piece_not_exact"] = same_off;
  r.summary["ratio_histogram"] = hist;
  r.pass = below == 0 && same_off == 0;
  r.tables.push_back(std::move(t));
  return r;
}

// ---- distance formulas -----------------------------------------------------------------

inline FormulaFit merge_formula(std::vector<FormulaFit> parts) {
  FormulaFit fit;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    fit.excluded += parts[i].excluded;
    for (FormulaRow row : parts[i].rows) {
      row.id = i;
      fit.rows.push_back(row);
    }
  }
  finish_fit(fit);
  return fit;
}

inline ConeoffFit merge_coneoff(std::vector<ConeoffFit> parts, bool thick_lhs, bool tree_term) {
  ConeoffFit fit;
  fit.thick_lhs = thick_lhs;
  fit.tree_term = tree_term;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    fit.excluded += parts[i].excluded;
    for (ConeoffRow row : parts[i].rows) {
      row.id = i;
      fit.rows.push_back(row);
    }
  }
  finish_coneoff_fit(fit);
  return fit;
}

inline FormulaFit piece_formula(const QuasiLineFamily& fam, const std::vector<std::pair<Word, Word>>& pairs, long K,
                                unsigned threads) {
  return merge_formula(parallel_map(pairs.size(), threads, [&](std::size_t i) { return piece_formula_fit(fam, {pairs[i]}, K); }));
}

inline FormulaFit glued_formula(const ModelSpace& X, int parity, const std::vector<QuasiLineFamily>& fams,
                                const std::vector<std::pair<XPoint, XPoint>>& pairs, long K, long radius, unsigned threads) {
  return merge_formula(parallel_map(pairs.size(), threads, [&](std::size_t i) {
    return glued_formula_fit(X, parity, fams, {pairs[i]}, K, radius);
  }));
}

inline ConeoffFit piece_coneoff(const ModelSpace& X, const TreeVertex& sigma, const QuasiLineFamily& fam,
                                const std::vector<std::pair<Word, Word>>& pairs, long K, int pad, std::uint64_t seed,
                                unsigned threads) {
  return merge_coneoff(parallel_map(pairs.size(), threads, [&](std::size_t i) {
    return piece_coneoff_fit(X, sigma, fam, {pairs[i]}, K, pad, 24, seed + i);
  }), false, false);
}

inline ConeoffFit global_coneoff(const ModelSpace& X, int parity, const std::vector<std::pair<XPoint, XPoint>>& pairs,
                                 long K, int pad, long glued_radius, std::uint64_t seed, unsigned threads) {
  return merge_coneoff(parallel_map(pairs.size(), threads, [&](std::size_t i) {
    return global_coneoff_fit(X, parity, {pairs[i]}, K, pad, glued_radius, 24, seed + i);
  }), false, false);
}

inline ConeoffFit coned_level(const ModelSpace& X, int parity, const std::vector<QuasiLineFamily>& fams,
                              const std::vector<std::pair<XPoint, XPoint>>& pairs, long K, int pad, std::uint64_t seed,
                              unsigned threads) {
  return merge_coneoff(parallel_map(pairs.size(), threads, [&](std::size_t i) {
    return coned_level_fit(X, parity, fams, {pairs[i]}, K, pad, 24, seed + i);
  }), true, true);
}

inline Json formula_summary(const FormulaFit& f) {
  return {{"N", round6(f.N)}, {"L", round6(f.L)}, {"rows", f.rows.size()}, {"excluded", f.excluded},
          {"lower_violations", f.lower_violations}};
}

inline Json coneoff_summary(const ConeoffFit& f) {
  return {{"N", round6(f.N)},
          {"L", round6(f.L)},
          {"N_with_tree", round6(f.N_with_tree)},
          {"rows", f.rows.size()},
          {"excluded", f.excluded},
          {"sampled", f.sampled},
          {"lower_violations", f.lower_violations}};
}

inline void coneoff_rows(Table& t, const std::string& label, const ConeoffFit& f) {
  for (const auto& row : f.rows)
    t.rows.push_back({label, num(row.id), num(row.lhs), num(row.thick), num(row.lines), num(row.d_tree), num(f.rhs(row)),
                      row.mode == ThickMode::Sampled ? "1" : "0"});
}

inline Report run_distance_formula(const ExperimentConfig& cfg) {
  Context ctx = load_context(cfg);
  const ModelSpace& X = *ctx.X;
  Report r{"distance-formula", base_config(cfg, "distance-formula"), {}, {}, true};
  r.config["variant"] = cfg.variant;
  const long k_tilde = cfg.k_tilde.value_or(2);
  positive("--k-tilde", k_tilde);
  r.config["k_tilde"] = k_tilde;
  if (cfg.variant == "piece") {
    const int radius = cfg.radius.value_or(10);
    const long K = cfg.K.value_or(2);
    const std::size_t n = cfg.samples.value_or(300);
    positive("--radius", radius);
    positive("--samples", static_cast<long>(n));
    r.config["vertex"] = ctx.graph.vertices[static_cast<std::size_t>(ctx.vertex)].id;
    r.config["radius"] = radius;
    r.config["K"] = K;
    r.config["samples"] = n;
    QuasiLineFamily fam = generate_quasilines(ctx.graph, ctx.vertex, k_tilde);
    FormulaFit f = piece_formula(fam, word_pairs(fam.rank, radius, n, cfg.seed), K, cfg.threads);
    Table t{"piece", {"id", "d", "sum"}, {}};
    for (const auto& row : f.rows) t.rows.push_back({num(row.id), num(row.d), num(row.sum)});
    r.summary = formula_summary(f);
    r.summary["classes"] = fam.classes.size();
    r.pass = f.lower_violations == 0;
    r.tables.push_back(std::move(t));
  } else if (cfg.variant == "x1") {
    const long radius = cfg.radius.value_or(8);
    const long K = cfg.K.value_or(2);
    const std::size_t n = cfg.samples.value_or(60);
    positive("--radius", radius);
    positive("--samples", static_cast<long>(n));
    r.config["parity"] = cfg.parity;
    r.config["radius"] = radius;
    r.config["K"] = K;
    r.config["samples"] = n;
    FormulaFit f = glued_formula(X, cfg.parity, families(ctx.graph, k_tilde), sample_pairs(X, cfg, n), K, radius, cfg.threads);
    Table t{"x1", {"id", "d", "sum", "d_tree", "truncated"}, {}};
    std::size_t truncated = 0;
    for (const auto& row : f.rows) {
      truncated += row.truncated;
      t.rows.push_back({num(row.id), num(row.d), num(row.sum), num(row.d_tree), row.truncated ? "1" : "0"});
    }
    r.summary = formula_summary(f);
    r.summary["truncated"] = truncated;
    r.pass = f.lower_violations == 0;
    r.tables.push_back(std::move(t));
  } else if (cfg.variant == "coneoff") {
    const long K = cfg.K.value_or(4);
    const int pad = cfg.pad.value_or(1);
    const long glued_radius = cfg.radius.value_or(8);
    const std::size_t n = cfg.samples.value_or(40);
    positive("--pad", pad);
    positive("--radius", glued_radius);
    positive("--samples", static_cast<long>(n));
    r.config["parity"] = cfg.parity;
    r.config["K"] = K;
    r.config["pad"] = pad;
    r.config["radius"] = glued_radius;
    r.config["samples"] = n;
    auto fams = families(ctx.graph, k_tilde);
    TreeVertex u = X.tree().base_vertex();
    std::vector<std::pair<Word, Word>> wp;
    {
      std::mt19937_64 rng(cfg.seed);
      std::vector<Word> b = ball(ctx.graph.rank(u.vertex), 5);
      for (std::size_t i = 0; i < n; ++i) {
        Word x = b[rng() % b.size()];
        wp.emplace_back(x, b[rng() % b.size()]);
      }
    }
    auto xp = parity_pairs(X, cfg, n, cfg.parity);
    ConeoffFit a = piece_coneoff(X, u, fams[static_cast<std::size_t>(u.vertex)], wp, K, pad, cfg.seed, cfg.threads);
    ConeoffFit b = global_coneoff(X, cfg.parity, xp, K, pad, glued_radius, cfg.seed, cfg.threads);
    ConeoffFit c = coned_level(X, cfg.parity, fams, xp, K, pad, cfg.seed, cfg.threads);
    Table t{"coneoff", {"formula", "id", "lhs", "thick", "lines", "d_tree", "rhs", "sampled"}, {}};
    coneoff_rows(t, "piece", a);
    coneoff_rows(t, "global", b);
    coneoff_rows(t, "coned", c);
    r.summary["piece"] = coneoff_summary(a);
    r.summary["global"] = coneoff_summary(b);
    r.summary["coned"] = coneoff_summary(c);
    r.pass = a.lower_violations == 0 && b.lower_violations == 0 && c.lower_violations == 0;
    r.tables.push_back(std::move(t));
  } else {
    throw InputError("usage", "unknown --variant " + cfg.variant + " (piece, x1, coneoff)");
  }
  return r;
}

// ---- partition and quasi-trees ---------------------------------------------------------

struct PartitionRun {
  QuasiLineFamily fam;
  TreeBall ball;
  std::vector<Axis> lines;
  long R = 0;
  std::vector<std::vector<std::size_t>> classes;
  PartitionCheck check;
  ProjectionReport projections;
};

inline PartitionRun partition_run(const AdmissibleGraph& g, int vertex, long k_tilde, int radius, long D, long theta) {
  PartitionRun p{generate_quasilines(g, vertex, k_tilde), TreeBall(g.rank(vertex), radius), {}, 0, {}, {}, {}};
  p.lines = lines_in_ball(p.fam, radius);
  p.R = covering_radius(p.ball, p.lines);
  p.classes = greedy_partition(p.ball, p.lines, D, p.R);
  p.check = verify_partition(p.ball, p.lines, p.classes, D, p.R);
  p.projections = bounded_projection_check(p.lines, theta);
  return p;
}

inline Report run_partition(const ExperimentConfig& cfg) {
  Context ctx = load_context(cfg);
  const int radius = cfg.radius.value_or(3);
  const long D = cfg.D.value_or(2), theta = cfg.theta.value_or(6), k_tilde = cfg.k_tilde.value_or(1);
  positive("--radius", radius);
  positive("--D", D);
  positive("--theta", theta);
  positive("--k-tilde", k_tilde);
  Report r{"partition", base_config(cfg, "partition"), {}, {}, true};
  r.config["vertex"] = ctx.graph.vertices[static_cast<std::size_t>(ctx.vertex)].id;
  r.config["radius"] = radius;
  r.config["D"] = D;
  r.config["theta"] = theta;
  r.config["k_tilde"] = k_tilde;
  PartitionRun p = partition_run(ctx.graph, ctx.vertex, k_tilde, radius, D, theta);
  const Alphabet& alpha = ctx.graph.vertices[static_cast<std::size_t>(ctx.vertex)].alphabet;
  Table t{"", {"class", "line", "axis", "coverage"}, {}};
  for (std::size_t c = 0; c < p.classes.size(); ++c) {
    std::vector<long> cov = coverage_distances(p.ball, p.lines, p.classes[c]);
    for (std::size_t l : p.classes[c]) {
      long worst = 0;
      for (long d : cov) worst = std::max(worst, d);
      t.rows.push_back({num(c), num(l), format_axis(p.lines[l], alpha), num(worst)});
    }
  }
  r.summary["family_classes"] = p.fam.classes.size();
  r.summary["lines"] = p.lines.size();
  r.summary["R"] = p.R;
  r.summary["classes"] = p.classes.size();
  r.summary["separation_violations"] = p.check.separation_violations;
  r.summary["coverage_violations"] = p.check.coverage_violations;
  r.summary["max_projection"] = p.projections.max_diameter;
  r.summary["projection_violations"] = p.projections.offending.size();
  r.pass = p.check.ok() && p.projections.pass;
  r.tables.push_back(std::move(t));
  return r;
}

struct QuasiTreeRow {
  std::size_t lines = 0, nodes = 0, bridges = 0, components = 0;
  BottleneckReport bottleneck;
  long distortion = 0;
};

inline std::vector<QuasiTreeRow> quasitree_rows(const PartitionRun& p, int radius, long K, std::size_t samples,
                                                std::uint64_t seed, unsigned threads) {
  return parallel_map(p.classes.size(), threads, [&](std::size_t c) {
    QuasiTree qt = build_quasitree(p.lines, p.classes[c], radius, K);
    return QuasiTreeRow{qt.lines.size(), qt.node_count, qt.bridges.size(), qt.components(),
                        bottleneck(qt, samples, seed + c), line_distortion(qt)};
  });
}

inline Report run_quasitree(const ExperimentConfig& cfg) {
  Context ctx = load_context(cfg);
  const int radius = cfg.radius.value_or(2);
  const long D = cfg.D.value_or(2), theta = cfg.theta.value_or(6), k_tilde = cfg.k_tilde.value_or(1);
  const long K = cfg.K.value_or(std::max(4 * theta, 8L));
  const std::size_t n = cfg.samples.value_or(200);
  positive("--radius", radius);
  positive("--D", D);
  positive("--K", K);
  positive("--samples", static_cast<long>(n));
  Report r{"quasitree", base_config(cfg, "quasitree"), {}, {}, true};
  r.config["vertex"] = ctx.graph.vertices[static_cast<std::size_t>(ctx.vertex)].id;
  r.config["radius"] = radius;
  r.config["D"] = D;
  r.config["theta"] = theta;
  r.config["K"] = K;
  r.config["k_tilde"] = k_tilde;
  r.config["samples"] = n;
  PartitionRun p = partition_run(ctx.graph, ctx.vertex, k_tilde, radius, D, theta);
  auto rows = quasitree_rows(p, radius, K, n, cfg.seed, cfg.threads);
  Table t{"", {"class", "lines", "nodes", "bridges", "components", "delta", "pairs", "line_distortion"}, {}};
  long delta = 0;
  std::size_t disconnected = 0;
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const auto& q = rows[c];
    delta = std::max(delta, q.bottleneck.delta);
    disconnected += q.bottleneck.disconnected;
    t.rows.push_back({num(c), num(q.lines), num(q.nodes), num(q.bridges), num(q.components), num(q.bottleneck.delta),
                      num(q.bottleneck.pairs), num(q.distortion)});
  }
  r.summary["classes"] = rows.size();
  r.summary["delta"] = delta;
  r.summary["disconnected_pairs"] = disconnected;
  r.pass = disconnected == 0 && p.check.ok();
  r.tables.push_back(std::move(t));
  return r;
}

// ---- embeddings ------------------------------------------------------------------------

struct PhiRun {
  DistortionReport rep;
  std::vector<bool> same_piece;
  std::size_t additivity_violations = 0;
};

inline PhiRun phi_run(const ModelSpace& X, const std::vector<std::pair<XPoint, XPoint>>& pairs, long radius, unsigned threads) {
  auto parts = parallel_map(pairs.size(), threads, [&](std::size_t i) { return distortion_report(X, {pairs[i]}, radius); });
  PhiRun out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.rep.excluded += parts[i].excluded;
    for (DistortionRow row : parts[i].rows) {
      row.id = i;
      const XPoint x = X.canonical(pairs[i].first);
      bool same = X.coords_in(pairs[i].second, x.piece).has_value();
      if (same) {
        // Both images taken in the common piece.
        auto d1 = glued_distance(X, 0, phi_at(X, x, x.piece, 0), phi_at(X, pairs[i].second, x.piece, 0), radius);
        auto d2 = glued_distance(X, 1, phi_at(X, x, x.piece, 1), phi_at(X, pairs[i].second, x.piece, 1), radius);
        out.additivity_violations += !d1 || !d2 || X.piece_distance(x, pairs[i].second) != *d1 + *d2 ||
                                     row.d_x != *d1 + *d2;
      }
      out.rep.C = std::max(out.rep.C, lambda_envelope(row.d_x, row.image()));
      out.rep.histogram[row.d_x - row.image()]++;
      out.rep.rows.push_back(row);
      out.same_piece.push_back(same);
    }
  }
  return out;
}

inline EmbedFit product_run(const ProductEmbedding& pe, const std::vector<std::pair<Word, Word>>& pairs, unsigned threads) {
  auto parts = parallel_map(pairs.size(), threads, [&](std::size_t i) { return product_fit(pe, {pairs[i]}); });
  EmbedFit fit;
  for (const auto& p : parts)
    for (const auto& row : p.rows) {
      fit.rows.push_back(row);
      fit.lambda = std::max(fit.lambda, lambda_envelope(row.first, row.second));
    }
  return fit;
}

inline Report run_embed(const ExperimentConfig& cfg) {
  Context ctx = load_context(cfg);
  const ModelSpace& X = *ctx.X;
  const long radius = cfg.radius.value_or(8);
  const int window = cfg.window.value_or(2);
  const long D = cfg.D.value_or(2), theta = cfg.theta.value_or(6), k_tilde = cfg.k_tilde.value_or(1);
  const long K = cfg.K.value_or(std::max(4 * theta, 8L));
  const std::size_t n = cfg.samples.value_or(100);
  positive("--radius", radius);
  positive("--window", window);
  positive("--samples", static_cast<long>(n));
  Report r{"embed", base_config(cfg, "embed"), {}, {}, true};
  r.config["vertex"] = ctx.graph.vertices[static_cast<std::size_t>(ctx.vertex)].id;
  r.config["radius"] = radius;
  r.config["window"] = window;
  r.config["D"] = D;
  r.config["K"] = K;
  r.config["k_tilde"] = k_tilde;
  r.config["samples"] = n;
  PhiRun phi = phi_run(X, sample_pairs(X, cfg, n), radius, cfg.threads);
  Table tp{"phi", {"id", "d_x", "d_1", "d_2", "same_piece"}, {}};
  for (std::size_t k = 0; k < phi.rep.rows.size(); ++k) {
    const auto& row = phi.rep.rows[k];
    tp.rows.push_back({num(row.id), num(row.d_x), num(row.d_1), num(row.d_2), phi.same_piece[k] ? "1" : "0"});
  }
  QuasiLineFamily fam = generate_quasilines(ctx.graph, ctx.vertex, k_tilde);
  ProductEmbedding pe = build_product(fam, window, D, K);
  EmbedFit prod = product_run(pe, word_pairs(fam.rank, window, n, cfg.seed), cfg.threads);
  Table tq{"product", {"id", "d", "image"}, {}};
  for (std::size_t k = 0; k < prod.rows.size(); ++k) tq.rows.push_back({num(k), num(prod.rows[k].first), num(prod.rows[k].second)});
  r.summary["phi"] = {{"C", round6(phi.rep.C)},
                      {"rows", phi.rep.rows.size()},
                      {"excluded", phi.rep.excluded},
                      {"same_piece", std::count(phi.same_piece.begin(), phi.same_piece.end(), true)},
                      {"additivity_violations", phi.additivity_violations}};
  r.summary["product"] = {{"lambda", round6(prod.lambda)}, {"classes", pe.classes.size()}, {"R", pe.R}, {"rows", prod.rows.size()}};
  r.pass = phi.rep.excluded == 0 && phi.additivity_violations == 0;
  r.tables.push_back(std::move(tp));
  r.tables.push_back(std::move(tq));
  return r;
}

// ---- cone-off pipeline -----------------------------------------------------------------

inline PipelineReport pipeline_run(const ModelSpace& X, int parity, const std::vector<std::pair<XPoint, XPoint>>& pairs,
                                   long K, int pad, long glued_radius, std::uint64_t seed, unsigned threads) {
  auto parts = parallel_map(pairs.size(), threads, [&](std::size_t i) {
    return qt_pipeline_check(X, parity, {pairs[i]}, K, pad, glued_radius, 24, seed + i);
  });
  PipelineReport rep;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    rep.excluded += parts[i].excluded;
    for (PipelineRow row : parts[i].rows) {
      row.id = i;
      rep.lambda = std::max(rep.lambda, lambda_envelope(row.d_x, row.image()));
      rep.rows.push_back(row);
    }
  }
  return rep;
}

inline Report run_coneoff_pipeline(const ExperimentConfig& cfg) {
  Context ctx = load_context(cfg);
  const ModelSpace& X = *ctx.X;
  const long K = cfg.K.value_or(4);
  const int pad = cfg.pad.value_or(1);
  const long glued_radius = cfg.radius.value_or(8);
  const std::size_t n = cfg.samples.value_or(40);
  positive("--pad", pad);
  positive("--radius", glued_radius);
  positive("--samples", static_cast<long>(n));
  Report r{"coneoff-pipeline", base_config(cfg, "coneoff-pipeline"), {}, {}, true};
  r.config["parity"] = cfg.parity;
  r.config["K"] = K;
  r.config["pad"] = pad;
  r.config["radius"] = glued_radius;
  r.config["samples"] = n;
  PipelineReport rep = pipeline_run(X, cfg.parity, parity_pairs(X, cfg, n, cfg.parity), K, pad, glued_radius, cfg.seed, cfg.threads);
  Table t{"", {"id", "d_x", "thick", "d_c", "image"}, {}};
  for (const auto& row : rep.rows) t.rows.push_back({num(row.id), num(row.d_x), num(row.thick), num(row.d_c), num(row.image())});
  r.summary["lambda"] = round6(rep.lambda);
  r.summary["rows"] = rep.rows.size();
  r.summary["excluded"] = rep.excluded;
  r.pass = rep.excluded == 0;
  r.tables.push_back(std::move(t));
  return r;
}

// ---- subgroups -------------------------------------------------------------------------

inline std::vector<GroupElement> parse_elements(const BassSerre& bs, const std::vector<std::string>& texts) {
  std::vector<GroupElement> out;
  for (const auto& s : texts) {
    try {
      out.push_back(bs.parse(s));
    } catch (const std::exception& e) {
      throw InputError("malformed-element", s + ": " + e.what());
    }
  }
  return out;
}

inline Report run_subgroup(const ExperimentConfig& cfg) {
  Context ctx = load_context(cfg);
  const ModelSpace& X = *ctx.X;
  const BassSerre& bs = X.tree();
  Report r{"subgroup", base_config(cfg, "subgroup"), {}, {}, true};
  r.config["mode"] = cfg.mode;
  r.config["generators"] = cfg.generators;
  std::vector<GroupElement> gens = parse_elements(bs, cfg.generators);
  if (cfg.mode == "morse") {
    std::vector<std::string> texts = cfg.elements.empty() ? cfg.generators : cfg.elements;
    if (texts.empty()) throw InputError("usage", "morse needs --element or --gen");
    r.config["elements"] = texts;
    Table t{"morse", {"element", "translation_length", "morse"}, {}};
    std::size_t morse = 0;
    for (const GroupElement& g : parse_elements(bs, texts)) {
      if (is_identity(g)) throw InputError("usage", "identity element has no Morse verdict");
      bool m = morse_test(bs, g);
      morse += m;
      t.rows.push_back({bs.format(g), num(bs.translation_length(g).length), m ? "1" : "0"});
    }
    r.summary["elements"] = t.rows.size();
    r.summary["morse"] = morse;
    r.tables.push_back(std::move(t));
    return r;
  }
  if (gens.empty()) throw InputError("usage", cfg.mode + " needs at least one --gen");
  const int L = cfg.length.value_or(cfg.mode == "height" ? 3 : 6);
  positive("--length", L);
  r.config["length"] = L;
  SubgroupSpec spec = screen_free(bs, gens, L);
  r.summary["verified_free_up_to"] = spec.verified_free_up_to;
  r.summary["words_checked"] = spec.words_checked;
  r.summary["free_screen"] = spec.verified;
  if (spec.witness) r.summary["witness"] = format_gen_word(*spec.witness);
  if (cfg.mode == "height") {
    const int radius = cfg.radius.value_or(2);
    positive("--radius", radius);
    r.config["radius"] = radius;
    HeightReport h = height_probe(bs, spec, radius, L);
    Table t{"height", {"conjugator"}, {}};
    for (const auto& c : h.family) t.rows.push_back({c});
    r.summary["conjugators"] = h.conjugators;
    r.summary["witnessed"] = h.witnessed;
    r.summary["in_subgroup"] = h.in_subgroup;
    r.summary["height_lower_bound"] = h.height_lower_bound();
    r.summary["elliptic_short"] = h.elliptic_short;
    r.summary["vertex_intersections_trivial"] = h.vertex_intersections_trivial();
    r.summary["finite_index_signal"] = h.finite_index_signal;
    r.pass = h.vertex_intersections_trivial();
    r.tables.push_back(std::move(t));
    return r;
  }
  if (cfg.mode != "core" && cfg.mode != "contract")
    throw InputError("usage", "unknown --mode " + cfg.mode + " (morse, core, contract, height)");
  const int radius = cfg.radius.value_or(3);
  positive("--radius", radius);
  r.config["radius"] = radius;
  CoreSpace core;
  try {
    core = build_core(X, spec, radius);
  } catch (const NotFreeEvidence& e) {
    r.summary["refused"] = e.what();
    r.pass = false;
    return r;
  } catch (const std::invalid_argument& e) {
    throw InputError("usage", e.what());
  }
  r.summary["orbit"] = core.orbit.size();
  r.summary["tree_window"] = core.tree_window.size();
  r.summary["mu_core"] = core.mu_core;
  r.summary["delta_prime"] = core.delta_prime;
  if (cfg.mode == "core") {
    Table t{"core", {"word", "point", "tree_vertex"}, {}};
    for (const auto& o : core.orbit)
      t.rows.push_back({o.word.empty() ? "1" : format_gen_word(o.word), X.format(o.point), bs.format(X.rho(o.point))});
    r.tables.push_back(std::move(t));
    return r;
  }
  const std::size_t n = cfg.samples.value_or(300);
  positive("--samples", static_cast<long>(n));
  positive("--c-max", cfg.c_max);
  r.config["samples"] = n;
  r.config["c_max"] = cfg.c_max;
  auto pairs = sample_pairs(X, cfg, n);
  auto fit = fit_contraction(X, core, pairs, cfg.c_max);
  Table t{"contract", {"C", "tested", "violations_1", "violations_2"}, {}};
  for (long C = 1; C <= (fit ? fit->C : cfg.c_max); ++C) {
    ContractionReport c = contraction_check(X, core, pairs, C);
    t.rows.push_back({num(C), num(c.tested), num(c.violations_1), num(c.violations_2)});
  }
  long R = neighborhood_radius(X, core, std::min<std::size_t>(n, 40), cfg.seed);
  r.summary["C"] = fit ? Json(fit->C) : Json(nullptr);
  r.summary["tested"] = fit ? fit->tested : 0;
  r.summary["R"] = R;
  r.pass = fit.has_value();
  r.tables.push_back(std::move(t));
  return r;
}

// ---- dispatch --------------------------------------------------------------------------

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"validate", "special-path", "distance-formula", "partition",
                                             "quasitree", "embed", "coneoff-pipeline", "subgroup"};
  return c;
}

inline Report run(const std::string& command, const ExperimentConfig& cfg) {
  if (command == "validate") return run_validate(cfg);
  if (command == "special-path") return run_special_path(cfg);
  if (command == "distance-formula") return run_distance_formula(cfg);
  if (command == "partition") return run_partition(cfg);
  if (command == "quasitree") return run_quasitree(cfg);
  if (command == "embed") return run_embed(cfg);
  if (command == "coneoff-pipeline") return run_coneoff_pipeline(cfg);
  if (command == "subgroup") return run_subgroup(cfg);
  throw InputError("usage", "unknown command " + command);
}

inline Json error_json(const std::string& kind, const std::string& message, int status) {
  return {{"error", {{"kind", kind}, {"message", message}}}, {"exit", status}};
}

}  // namespace ckaw::exp
