#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace melonfield::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitEstimator = 4;

inline constexpr const char* kSchemaVersion = "1";

/// Default configuration of a command; the accepted keys and their types.
nlohmann::json default_config(const std::string& command);

/// Merges `user` into the command defaults, rejecting unknown keys and mistyped values (ConfigError).
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& user);

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double value);

/// Runs one invocation. args excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace melonfield::cli
