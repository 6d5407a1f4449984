#include <iostream>
#include <string>
#include <vector>

#include "wbt/app/commands.hpp"

int main(int argc, char** argv) {
  return wbt::app::RunCli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
