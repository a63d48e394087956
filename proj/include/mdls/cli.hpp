#pragma once

// Command-line front end. Subcommands: generate, train, calibrate, evaluate,
// kappa, vote, consistency.
//
// Exit codes: 0 success, 2 config/validation error, 3 model/data dimension
// mismatch, 1 anything else.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mdls/core.hpp"
#include "mdls/detectors.hpp"
#include "mdls/stream_sim.hpp"
#include "mdls/training.hpp"

namespace mdls::cli {

enum ExitCode : int { ok = 0, unexpected = 1, invalid = 2, mismatch = 3 };

struct RunConfig {
    std::uint64_t seed = 0;
    SyntheticConfig synthetic;
    int num_train = -1;  // -1: two thirds of num_videos
    TrainConfig train;
    FusionKind fusion = FusionKind::concat;
    TimelinessConfig timeliness;
    std::vector<double> grid;  // empty: default quantile grid
    std::optional<std::filesystem::path> data_dir;
    std::optional<std::filesystem::path> model_path;
    std::optional<std::filesystem::path> out_dir;

    /// Module seeds derive from the global seed by fixed offsets.
    void apply_seed(std::uint64_t global);
    int train_count() const;
    void validate() const;
};

/// Flat `key = value` records, one per line; `#` starts a comment.
/// Unknown keys and bad values raise ConfigError naming the key.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

std::vector<double> parse_grid(const std::string& text);

/// Runs one command line (args exclude the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mdls::cli
