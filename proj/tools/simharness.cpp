#include "simharness/cli.hpp"

int main(int argc, char** argv)
{
    return simharness::run_cli(argc, argv);
}
