#include <string>
#include <vector>

#include "spacoclust/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return spacoclust::cli::run_subcommand(std::move(args));
}
