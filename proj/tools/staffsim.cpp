#include <staffsim/cli.hpp>

int main(int argc, char** argv)
{
  return staffsim::cli::main(argc, argv);
}
