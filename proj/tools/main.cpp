#include <string>
#include <vector>

#include "cif/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cif::cli::dispatch(args);
}
