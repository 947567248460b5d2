#include <string>
#include <vector>

#include "rpglab/cli.hpp"

int main(int argc, char** argv) {
    return rpglab::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
