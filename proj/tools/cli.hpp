#pragma once

#include <string>
#include <vector>

namespace hcg::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point shared by the binary and the integration tests. Returns the
/// process exit code; operational failures print a JSON error object to
/// stderr and return nonzero.
int run(const std::vector<std::string>& args);

}  // namespace hcg::cli
