#include "cli_app.hpp"

int main(int argc, char** argv) {
    return sigtrade::cli::run(argc, argv);
}
