#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "bevproj/geometry.hpp"
#include "bevproj/projector.hpp"
#include "bevproj/sampling.hpp"

namespace bevproj {

/// Division guard for the Eq.-8 merge: cells where both confidences sum
/// below this are treated as having no information.
inline constexpr double kConfEps = 1e-6;

struct FusionConfig {
    int K = 8;
    SampleMode mode = SampleMode::Stochastic;
    uint64_t seed = 0;
    double gamma = 0.9;                              // history confidence decay per save
    std::vector<double> memory_distances = {1, 4, 8, 12};  // meters, increasing
    int T = 4;                                       // memory subset size
    bool use_gaussian = true;   // probabilistic projection vs static pull
    bool use_alpha = true;      // predicted confidences vs all-ones
    bool use_raw_hist = true;   // Eq.-8 raw history merge
    bool trace = false;         // per-stage checksums in FrameOutput
    bool keep_per_camera = false;

    void validate() const;  // throws ConfigError
};

/// Sets the three component switches for an ablation row id
/// (A, B1, B2, C1, C2, D, E); throws ConfigError for anything else.
void apply_ablation_row(FusionConfig& cfg, const std::string& row);

/// Warpable raw history plus the ring of past fused BEV features.
struct HistoryState {
    static constexpr size_t kRingCapacity = 20;

    std::optional<RawBev> raw_hist;  // B_raw_hist + alpha_hist, in pose_hist frame
    EgoPose pose_hist;

    struct RingEntry {
        Tensor features;  // fused B, C x h x w
        EgoPose pose;
    };
    std::deque<RingEntry> ring;  // oldest first, size <= kRingCapacity
};

/// Eq. 7: per-cell average over contributing cameras, where contribution
/// is geometric coverage (valid projection), independent of alpha.
RawBev merge_cameras(const std::vector<RawBev>& per_camera);

/// Eq. 8: confidence-weighted merge of the current and warped-history
/// grids. features = (a B + a_h B_h) / (a + a_h);
/// conf = (a^2 + a_h^2) / (a + a_h); both zero below the kConfEps guard.
RawBev merge_history(const RawBev& cur, const RawBev& hist_warped);

/// Stores the post-merge grid as the new raw history with confidence
/// decayed by gamma, and stamps its pose.
void update_raw_history(HistoryState& state, const RawBev& merged,
                        const EgoPose& pose, double gamma);

/// Picks cfg.T ring entries by matching ego displacement against
/// cfg.memory_distances, without replacement while entries remain
/// (ties prefer the more recent entry; duplicates only when the ring is
/// shorter than T), and warps each into the current frame.
std::vector<Tensor> select_memory(const HistoryState& state, const EgoPose& pose,
                                  const BevGridSpec& grid, const FusionConfig& cfg);

/// Per-cell linear map from the concatenated (T+1)*C vector to C.
/// `weights` has shape ((T+1)*C) x C; without weights the current
/// features pass through unchanged.
Tensor temporal_fuse(const RawBev& cur, const std::vector<Tensor>& memory,
                     const Tensor* weights);

}  // namespace bevproj
