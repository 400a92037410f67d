#include <iostream>

#include "bellclick_app.hpp"

int main(int argc, char** argv) {
  return bellclick::cli::run(argc, argv, std::cout, std::cerr);
}
