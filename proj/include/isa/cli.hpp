#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace isa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kVersion = "isa 1.0.0";

/**
 * Entry point for the `isa` executable. `args` excludes the program name.
 *
 * Subcommands: simulate, estimate, infer, benchmark, coverage, replay.
 * Every run writes manifest.json holding the resolved configuration;
 * `replay --manifest F --out D` re-executes it into D.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Re-runs the command recorded in a manifest, writing into `out_dir`.
int replay(const std::filesystem::path& manifest, const std::filesystem::path& out_dir, std::ostream& err);

}  // namespace isa::cli
