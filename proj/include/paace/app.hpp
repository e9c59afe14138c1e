#pragma once

#include "paace/http_backend.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace paace {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitTransport = 3;
inline constexpr int kExitData = 4;

/// The `paace` command line: synth | run | evolve | extract | eval | compress.
/// Returns the process exit status; diagnostics go to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const EnvLookup& env = process_env());

}  // namespace paace
