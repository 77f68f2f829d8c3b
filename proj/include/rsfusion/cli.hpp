#pragma once

#include <iosfwd>

namespace rsfusion {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

inline constexpr int kStatsSchemaVersion = 1;

/// Entry point of the `rsfuse` tool: subcommands fuse, simulate, eval, masks, experiment.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rsfusion
