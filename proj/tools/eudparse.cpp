#include "eud/cli.hpp"

#include <iostream>

int main(int argc, char ** argv)
{
  return eud::run_cli(argc, argv, std::cout, std::cerr);
}
