#pragma once

#include <string>
#include <vector>

namespace polysle {

// Exit codes: 0 success/pass, 1 verification fail, 2 inconclusive,
// >2 usage/config errors.
int run_cli(const std::vector<std::string>& args);

} // namespace polysle
