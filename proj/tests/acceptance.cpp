// Prints one PASS/FAIL line per acceptance criterion. Exit status is 0 once every criterion has been
// evaluated; pass --strict to make any FAIL line a nonzero exit.

#include <cstdio>
#include <cstring>
#include <exception>

#include "suite.hpp"

int main(int argc, char** argv) {
  bool strict = false;
  eiv::suite::Options opt;
  opt.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--strict")) strict = true;
    else if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc) opt.jobs = std::max(1, std::atoi(argv[++i]));
    else {
      std::fprintf(stderr, "usage: acceptance [--strict] [--jobs N]\n");
      return 1;
    }
  }
  int failed = 0;
  for (int id = 1; id <= 10; ++id) {
    try {
      const auto r = eiv::suite::run({id}, opt).front();
      std::printf("%s\n", r.line().c_str());
      failed += !r.pass;
    } catch (const std::exception& e) {
      std::printf("FAIL %2d error: %s\n", id, e.what());
      ++failed;
    }
    std::fflush(stdout);
  }
  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return strict && failed ? 1 : 0;
}
