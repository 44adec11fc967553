#include <iostream>
#include <string>
#include <vector>

#include "ctxrec/cli.hpp"

int main(int argc, char** argv) {
    return ctxrec::cli::dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
