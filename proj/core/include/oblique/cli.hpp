#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "oblique/config.hpp"

namespace oblique {

/// Exit codes of run().
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAuditFailure = 2;

std::string version_string();

/// Runs one subcommand; `args` excludes the program name, e.g.
/// {"solve", "--config", "a.cfg", "--h", "0.03125"}. Writes `<out>` (a CSV),
/// `<out>.report` and `<out>.manifest`, and echoes the report to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Text of `<out>.manifest`: config hash, grid size, seed, version.
std::string manifest_text(const ExperimentConfig* cfg, const std::string& subcommand, const Grid* grid,
                          int threads);

}  // namespace oblique
