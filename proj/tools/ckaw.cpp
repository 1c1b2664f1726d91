#include <iostream>

#include "CLI11.hpp"

#include "ckaw/experiments.hpp"

namespace {

using ckaw::exp::ExperimentConfig;

void common_flags(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--instance", cfg.instance, "instance YAML file")->required();
  sub->add_option("--seed", cfg.seed, "seed for every random choice");
  sub->add_option("--out", cfg.out, "output directory");
  sub->add_option("--threads", cfg.threads, "worker threads, 0 for all cores");
}

void sample_flags(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--samples", cfg.samples, "number of sampled pairs");
  sub->add_option("--depth", cfg.depth, "tree depth of sampled points")->check(CLI::PositiveNumber);
  sub->add_option("--word-length", cfg.word_length, "max word length of sampled points")->check(CLI::NonNegativeNumber);
  sub->add_option("--height", cfg.height, "max |h| of sampled points")->check(CLI::NonNegativeNumber);
}

int emit_error(const std::string& kind, const std::string& msg, int status) {
  std::cout << ckaw::exp::error_json(kind, msg, status).dump() << std::endl;
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workbench for flip admissible groups: model spaces, special paths, quasi-trees and subgroups"};
  app.require_subcommand(0, 1);
  bool dump_schema = false;
  app.add_flag("--schema", dump_schema, "print the report column schema as JSON and exit");
  ExperimentConfig cfg;

  CLI::App* validate = app.add_subcommand("validate", "check admissibility of an instance");
  common_flags(validate, cfg);

  CLI::App* sp = app.add_subcommand("special-path", "single special path query or quasi-geodesic fit");
  common_flags(sp, cfg);
  sample_flags(sp, cfg);
  sp->add_option("--radius", cfg.radius, "corridor radius of the BFS oracle");
  sp->add_option("--from", cfg.from, "first point, 'coset | word | h'");
  sp->add_option("--to", cfg.to, "second point");

  CLI::App* df = app.add_subcommand("distance-formula", "fit a distance formula");
  common_flags(df, cfg);
  sample_flags(df, cfg);
  df->add_option("--variant", cfg.variant, "piece, x1 or coneoff")->check(CLI::IsMember({"piece", "x1", "coneoff"}));
  df->add_option("--radius", cfg.radius, "word radius (piece) or glued corridor radius (x1, coneoff)");
  df->add_option("--K", cfg.K, "cutoff threshold");
  df->add_option("--k-tilde", cfg.k_tilde, "annulus radius of the quasi-line family");
  df->add_option("--pad", cfg.pad, "cone-off window padding");
  df->add_option("--parity", cfg.parity, "glued space parity")->check(CLI::IsMember({0, 1}));
  df->add_option("--vertex", cfg.vertex, "vertex id for the piece variant");

  CLI::App* part = app.add_subcommand("partition", "greedy partition of the quasi-lines in a ball");
  common_flags(part, cfg);
  part->add_option("--radius", cfg.radius, "ball radius");
  part->add_option("--D", cfg.D, "separation");
  part->add_option("--theta", cfg.theta, "projection bound");
  part->add_option("--k-tilde", cfg.k_tilde, "annulus radius of the quasi-line family");
  part->add_option("--vertex", cfg.vertex, "vertex id");

  CLI::App* qt = app.add_subcommand("quasitree", "quasi-trees of quasi-lines and the bottleneck test");
  common_flags(qt, cfg);
  qt->add_option("--samples", cfg.samples, "bottleneck pairs per class");
  qt->add_option("--radius", cfg.radius, "ball radius");
  qt->add_option("--D", cfg.D, "separation");
  qt->add_option("--theta", cfg.theta, "projection bound");
  qt->add_option("--K", cfg.K, "admission threshold, default max(4 theta, 8)");
  qt->add_option("--k-tilde", cfg.k_tilde, "annulus radius of the quasi-line family");
  qt->add_option("--vertex", cfg.vertex, "vertex id");

  CLI::App* em = app.add_subcommand("embed", "distortion of phi and of the product embedding");
  common_flags(em, cfg);
  sample_flags(em, cfg);
  em->add_option("--radius", cfg.radius, "glued corridor radius");
  em->add_option("--window", cfg.window, "ball radius of the product embedding");
  em->add_option("--D", cfg.D, "separation");
  em->add_option("--theta", cfg.theta, "projection bound");
  em->add_option("--K", cfg.K, "admission threshold, default max(4 theta, 8)");
  em->add_option("--k-tilde", cfg.k_tilde, "annulus radius of the quasi-line family");
  em->add_option("--vertex", cfg.vertex, "vertex id");

  CLI::App* pipe = app.add_subcommand("coneoff-pipeline", "cone-off and binding quasi-tree distortion");
  common_flags(pipe, cfg);
  sample_flags(pipe, cfg);
  pipe->add_option("--radius", cfg.radius, "glued corridor radius");
  pipe->add_option("--K", cfg.K, "cutoff threshold");
  pipe->add_option("--pad", cfg.pad, "cone-off window padding");
  pipe->add_option("--parity", cfg.parity, "glued space parity")->check(CLI::IsMember({0, 1}));

  CLI::App* sg = app.add_subcommand("subgroup", "Morse test, core, contraction and height probes");
  common_flags(sg, cfg);
  sample_flags(sg, cfg);
  sg->add_option("--mode", cfg.mode, "morse, core, contract or height")
      ->check(CLI::IsMember({"morse", "core", "contract", "height"}));
  sg->add_option("--gen", cfg.generators, "subgroup generator, repeatable");
  sg->add_option("--element", cfg.elements, "element for the Morse test, repeatable");
  sg->add_option("--radius", cfg.radius, "orbit radius (core, contract) or conjugator radius (height)");
  sg->add_option("--length", cfg.length, "generator word length of the freeness screen");
  sg->add_option("--c-max", cfg.c_max, "largest contraction constant tried");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return emit_error("usage", e.what(), 2);
  }

  if (dump_schema) {
    std::cout << ckaw::exp::schema_json().dump(2) << std::endl;
    return 0;
  }
  auto subs = app.get_subcommands();
  if (subs.empty()) return emit_error("usage", "a subcommand is required", 2);
  const std::string command = subs.front()->get_name();

  try {
    ckaw::exp::Report rep = ckaw::exp::run(command, cfg);
    ckaw::exp::write_report(rep, cfg.out);
    std::cout << ckaw::exp::report_json(rep).dump() << std::endl;
    return rep.pass ? 0 : 1;
  } catch (const ckaw::exp::InputError& e) {
    return emit_error(e.kind(), e.what(), 2);
  } catch (const ckaw::MalformedInput& e) {
    return emit_error("malformed-input", e.what(), 2);
  } catch (const std::exception& e) {
    return emit_error("failure", e.what(), 1);
  }
}
