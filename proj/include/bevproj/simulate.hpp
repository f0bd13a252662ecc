#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "bevproj/pipeline.hpp"

namespace bevproj {

/// Everything cmd_simulate accepts. Defaults mirror the CLI defaults.
struct SimulateOptions {
    std::filesystem::path calib_path;
    std::filesystem::path scene_path;
    std::filesystem::path trajectory_path;
    std::filesystem::path out_dir;

    double x_min = -30, x_max = 30, y_min = -15, y_max = 15, cell = 0.5;
    FusionConfig fusion;
    ProviderKind provider = ProviderKind::Zero;
    ConstantFields constant_fields;
    double noise_sigma = 0;
    double score_max_range = 0;
    std::optional<size_t> frames;  // truncate the trajectory; 0 rejected
    bool previews = false;
    bool dump_bev = false;  // per-frame fused/conf tensors
};

/// Runs the sequence and writes report.txt (deterministic metrics; byte
/// identical for a fixed seed regardless of thread count), timing.txt
/// (fps and per-stage milliseconds; excluded from determinism), and the
/// optional tensor dumps and PGM previews.
SequenceResult simulate_run(const SimulateOptions& opts);

/// Locale-independent shortest-round-trip formatting used in all reports.
std::string format_double(double v);

}  // namespace bevproj
