#include "snse/runner.hpp"

int main(int argc, char** argv)
{
    return snse::cli_main(argc, argv);
}
