#include <vector>

#include "aq/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return aq::cli::parse_and_dispatch(args);
}
