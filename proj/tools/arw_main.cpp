#include "arw/cli/commands.hpp"

int main(int argc, char** argv)
{
    return arw::cli::run_main(argc, argv);
}
