#include "uslads/cli.hpp"

int main(int argc, char** argv)
{
  return uslads::cli::main(std::vector<std::string>(argv, argv + argc));
}
