#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfbounds/config.hpp"

namespace mfb {

enum class DirectionChoice { Upper, Lower, Both };

DirectionChoice direction_choice_from_string(const std::string& name);

/// Each command writes its files under `out` and returns the main document it wrote.
/// Every document embeds the resolved config under "config".
json cmd_generate(const RunConfig& config, const std::filesystem::path& out);

/// Uses `instruments` when given, else out/instruments.json when present, else
/// prices the constraints first (writing instruments.json).
json cmd_bound(const RunConfig& config, const std::filesystem::path& out, DirectionChoice direction,
               const std::optional<std::filesystem::path>& instruments = std::nullopt);

/// LP oracle on the discretized market. Writes lp_report.json; an infeasible
/// price set is reported in the file and then raised as ErrorKind::Infeasible.
json cmd_verify(const RunConfig& config, const std::filesystem::path& out,
                const std::optional<std::filesystem::path>& instruments = std::nullopt,
                const std::optional<std::filesystem::path>& bound_result = std::nullopt);

json cmd_sweep(const RunConfig& config, const std::filesystem::path& out, DirectionChoice direction);
json cmd_convergence(const RunConfig& config, const std::filesystem::path& out);
json cmd_timing(const RunConfig& config, const std::filesystem::path& out);

/// Entry point of the `mfbounds` executable; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace mfb
