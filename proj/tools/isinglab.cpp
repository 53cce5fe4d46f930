#include "isinglab/cli.hpp"

int main(int argc, char** argv)
{
    return isinglab::cli_dispatch(argc, argv);
}
