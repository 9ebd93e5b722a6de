#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qsurf/config.hpp"

namespace qsurf {

inline constexpr const char* kVersion = "1.0.0";

struct RunOptions {
    int threads = 1;
    std::optional<std::filesystem::path> out_dir;   // overrides the config's output
};

struct CheckResult {
    std::string name;
    std::string verdict;   // pass / fail / indeterminate
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct RunResult {
    int exit_code = 0;
    std::vector<CheckResult> checks;
    std::vector<std::string> artifacts;
    std::string error;
};

const std::vector<std::string>& subcommands();

// Runs one subcommand and writes its artifacts plus manifest.json into the
// output directory. Exit code 0: every check passed; 2: some check failed;
// 1: runtime error (the manifest then carries status "failed").
RunResult run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& options = {});

// Command line entry: qsurf <subcommand> --config <path> [--out <dir>]
// [--threads N] [--override key=value]...
int cli_main(int argc, char** argv);

}  // namespace qsurf
