#include <string>
#include <vector>

#include "videogan/cli.hpp"

int main(int argc, char** argv) {
  return videogan::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
