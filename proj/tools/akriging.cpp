#include <iostream>

#include "akriging/cli.hpp"

int main(int argc, char** argv)
{
    return akriging::run_cli(argc, argv, std::cout, std::cerr);
}
