#include <iostream>

#include "melonfield/cli.hpp"

int main(int argc, char** argv) {
  return melonfield::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
