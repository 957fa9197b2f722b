#include <string>
#include <vector>

#include "polysle/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return polysle::run_cli(args);
}
