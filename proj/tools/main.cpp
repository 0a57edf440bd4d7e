#include "trancheloss/cli.hpp"

int main(int argc, char** argv) {
    return trancheloss::cli::cli_main(argc, argv);
}
