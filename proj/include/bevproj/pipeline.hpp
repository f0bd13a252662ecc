#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bevproj/fields.hpp"
#include "bevproj/fusion.hpp"
#include "bevproj/geometry.hpp"
#include "bevproj/projector.hpp"
#include "bevproj/scenegen.hpp"
#include "bevproj/tensor.hpp"

namespace bevproj {

/// One frame of inputs. The camera set must stay constant over a
/// sequence; features and providers are indexed like the context's rigs.
struct FrameInput {
    std::vector<Tensor> features;          // per camera, C x H x W
    std::vector<FieldProvider> providers;  // per camera
    EgoPose pose;
    int64_t frame_index = 0;
};

struct StageChecksum {
    std::string stage;
    uint64_t value = 0;
};

struct FrameOutput {
    Tensor fused;   // B, C x h x w
    RawBev merged;  // B_raw and alpha after the history merge
    std::vector<RawBev> per_camera;      // populated when cfg.keep_per_camera
    std::vector<StageChecksum> trace;    // populated when cfg.trace
    std::map<std::string, double> stage_ms;
};

/// Static-per-sequence products: pull maps and distance masks are cached
/// here and recomputed only when calibration or grid change.
struct PipelineContext {
    std::vector<CameraRig> rigs;
    BevGridSpec grid;
    GroundPlane assumed_plane;
    FusionConfig cfg;
    std::vector<PullMap> pulls;
    std::vector<std::vector<double>> dmasks;
    const Tensor* fusion_weights = nullptr;  // optional ((T+1)*C) x C map

    static PipelineContext create(std::vector<CameraRig> rigs, BevGridSpec grid,
                                  GroundPlane assumed_plane, FusionConfig cfg);
};

/// Executes one frame in order: per-camera fields / parameter update /
/// projection, camera merge, history warp + merge, memory selection +
/// temporal fusion, history save. The returned state replaces the one
/// passed in; an empty state is the first-frame case.
std::pair<FrameOutput, HistoryState> run_frame(const PipelineContext& ctx,
                                               const FrameInput& input,
                                               HistoryState state);

struct TrajectoryPoint {
    double t = 0;
    EgoPose pose;
};

/// One "t x y yaw" pose per line, '#' comments allowed.
std::vector<TrajectoryPoint> parse_trajectory(const std::filesystem::path& path);
std::vector<TrajectoryPoint> parse_trajectory_text(const std::string& text,
                                                   const std::string& origin);

enum class ProviderKind { Zero, SlopeOracle, OccluderMask, Constant, Loaded };

struct SequenceConfig {
    std::vector<CameraRig> rigs;
    BevGridSpec grid;
    GroundPlane assumed_plane = GroundPlane::flat();
    FusionConfig fusion;
    SceneSpec scene;
    std::vector<TrajectoryPoint> trajectory;
    ProviderKind provider = ProviderKind::Zero;
    ConstantFields constant_fields;        // used when provider == Constant
    std::vector<LoadedFields> loaded_fields;  // per camera, when Loaded
    double noise_sigma = 0;   // i.i.d. additive feature noise, keyed by (seed, frame, cam)
    double score_max_range = 0;  // 0 = no range cut
};

struct SequenceResult {
    std::vector<ScoreReport> per_frame;
    ScoreReport mean;
    std::vector<Tensor> fused;           // per frame, C x h x w
    std::vector<Tensor> conf;            // per frame, h x w
    std::vector<std::vector<uint8_t>> score_masks;
    std::vector<std::vector<StageChecksum>> traces;
    std::map<std::string, double> stage_ms;
    double total_seconds = 0;
    double fps = 0;
};

/// Renders the scene along the trajectory and drives run_frame over it.
/// Deterministic given (cfg.fusion.seed, inputs); timing fields excluded.
SequenceResult run_sequence(const SequenceConfig& seq);

}  // namespace bevproj
