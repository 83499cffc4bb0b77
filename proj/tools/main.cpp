// ssgsim: stable-semantic graph similarity for EVM bytecode
// Licensed under the Apache License, Version 2.0.

#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return ssgsim::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
