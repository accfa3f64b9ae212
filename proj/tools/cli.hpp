#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "cli_support.hpp"

namespace nonlocal::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kDivergence = 2;
inline constexpr int kNonConvergence = 3;
inline constexpr int kRegressionMismatch = 4;
inline constexpr int kInternalError = 5;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const std::vector<Schema>& schemas();

}  // namespace nonlocal::cli
