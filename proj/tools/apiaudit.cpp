#include <string>
#include <vector>

#include "apiaudit/cli.hpp"

int main(int argc, char** argv) {
    return apiaudit::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
