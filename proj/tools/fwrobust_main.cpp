#include <string>
#include <vector>

#include "fwrobust/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fwrobust::run_cli(std::move(args));
}
