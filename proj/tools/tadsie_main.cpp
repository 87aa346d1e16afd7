#include <string>
#include <vector>

#include "tadsie/cli.hpp"

int main(int argc, char** argv) {
  return tadsie::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
