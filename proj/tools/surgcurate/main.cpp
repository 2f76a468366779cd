#include <iostream>
#include <string>
#include <vector>

#include "surgcurate_app/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return surgcurate::app::run(args, std::cout, std::cerr);
}
