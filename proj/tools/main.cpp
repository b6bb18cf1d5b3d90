#include <iostream>
#include <string>
#include <vector>

#include "deephedge/cli.hpp"

int main(int argc, char** argv) {
    return deephedge::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
