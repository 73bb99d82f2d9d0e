#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  return rivex::cli::run(std::vector<std::string>(argv, argv + argc));
}
