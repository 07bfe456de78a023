#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace misgan {

struct RunOptions {
  std::string task;
  std::string config_path;
  bool force = false;  // allow overwriting existing outputs
  std::optional<std::uint64_t> seed_override;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Dispatch one task. Inputs are checked before any output is created, and
/// existing outputs are never overwritten unless force is set. Returns an
/// exit code (0 success, 1 usage error, 2 runtime error); diagnostics go to
/// err, reports without an output_dir go to out.
int run_task(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace misgan
