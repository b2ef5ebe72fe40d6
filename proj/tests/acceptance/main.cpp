// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
// An optional argument selects criteria whose name contains it.
#include <cstdio>
#include <exception>

#include "criteria.hpp"

int main(int argc, char** argv) {
  using namespace aifml::acceptance;
  std::vector<Criterion> all;
  register_core(all);
  register_bridge(all);
  int failed = 0;
  for (const auto& c : all) {
    if (argc > 1 && c.name.find(argv[1]) == std::string::npos) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
