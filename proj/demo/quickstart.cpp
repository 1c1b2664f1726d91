// Load an instance, query a special path, classify a few elements, build a subgroup core.

#include <iostream>

#include "ckaw/config.hpp"
#include "ckaw/subgroups.hpp"

int main(int argc, char** argv) {
  using namespace ckaw;
  const std::string path = argc > 1 ? argv[1] : "instances/e1.yaml";
  AdmissibleGraph g = load_instance(path);
  if (!validate_admissible(g).ok()) {
    std::cerr << path << " is not admissible\n";
    return 1;
  }
  ModelSpace X(g);
  const BassSerre& bs = X.tree();

  XPoint x = X.parse_point("1 | b | 0");
  XPoint y = X.parse_point("e | d | 3");
  SpecialPath sp = special_path(X, x, y);
  std::cout << "special path " << X.format(x) << " -> " << X.format(y) << ": length " << sp.length() << ", distance "
            << X.distance(x, y) << ", corners";
  for (const XPoint& c : sp.corners) std::cout << " [" << X.format(c) << "]";
  std::cout << "\n";

  for (const char* s : {"(ab,0)", "(b,0).e.(d,0).e^-1", "e.(cd,1).e^-1"}) {
    GroupElement h = bs.parse(s);
    std::cout << s << ": translation length " << bs.translation_length(h).length
              << (morse_test(bs, h) ? ", Morse\n" : ", elliptic\n");
  }

  SubgroupSpec spec = screen_free(bs, {bs.parse("(b,0).e.(d,0).e^-1"), bs.parse("(bb,0).e.(dd,0).e^-1")}, 6);
  CoreSpace core = build_core(X, spec, 2);
  std::cout << "rank-2 core: " << core.orbit.size() << " orbit points, " << core.tree_window.size()
            << " tree vertices, mu_core " << core.mu_core << "\n";
  return 0;
}
