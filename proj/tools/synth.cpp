// Writes a directory of synthetic PGM covers for demos and tests.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "stegcost/pgm.hpp"
#include "stegcost/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write synthetic grayscale covers", "stegcost-synth"};
  std::string dir;
  std::size_t count = 64;
  int width = 64, height = 64;
  std::uint64_t seed = 1;
  app.add_option("--out", dir, "Output directory")->required();
  app.add_option("--count", count, "Number of covers")->check(CLI::PositiveNumber);
  app.add_option("--width", width)->check(CLI::Range(8, 8192));
  app.add_option("--height", height)->check(CLI::Range(8, 8192));
  app.add_option("--seed", seed);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    std::filesystem::create_directories(dir);
    const auto covers = stegcost::synthetic_corpus(count, width, height, seed);
    for (std::size_t i = 0; i < covers.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "cover_%04zu.pgm", i);
      stegcost::save_image(covers[i], std::filesystem::path(dir) / name);
    }
    std::cout << "wrote " << covers.size() << " covers to " << dir << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
