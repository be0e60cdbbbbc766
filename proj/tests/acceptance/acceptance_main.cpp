// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--criteria 1,2,5] [--full-scale] [--workdir DIR] [--quiet]

#include <cstdio>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "criteria.hpp"

int main(int argc, char **argv) {
  CLI::App app{"eitbc acceptance suite"};
  std::vector<int> ids;
  acceptance::Options opt;
  std::string workdir = opt.workdir.string();
  bool quiet = false;
  app.add_option("--criteria", ids, "criterion numbers to run (default: all)")->delimiter(',');
  app.add_flag("--full-scale", opt.full_scale, "also run the full-scale mesh checks");
  app.add_option("--workdir", workdir, "scratch directory for experiment outputs");
  app.add_option("--seed", opt.seed, "noise seed");
  app.add_flag("--quiet", quiet, "suppress detail lines");
  CLI11_PARSE(app, argc, argv);
  opt.workdir = workdir;
  if (quiet)
    opt.log = {};
  const int failures = acceptance::run(std::set<int>(ids.begin(), ids.end()), opt);
  return failures == 0 ? 0 : 1;
}
