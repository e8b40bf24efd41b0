#include <iostream>

#include "dcqe/app.hpp"

int main(int argc, char** argv) {
  return dcqe::run_cli(argc, argv, std::cout, std::cerr);
}
