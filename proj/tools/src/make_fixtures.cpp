#include <iostream>

#include "p2m/cli/fixtures.hpp"
#include "p2m/error.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: p2m_make_fixtures <dir>\n";
    return 2;
  }
  try {
    for (const auto& f : p2m::cli::write_fixtures(argv[1])) std::cout << f << '\n';
  } catch (const p2m::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
