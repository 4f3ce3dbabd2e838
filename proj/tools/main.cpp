#include <string>
#include <vector>

#include "fx42/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fx42::cli::dispatch(args);
}
