#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bevproj/geometry.hpp"
#include "bevproj/tensor.hpp"

namespace bevproj {

/// Procedural ground pattern: parallel stripes running along `heading`,
/// repeating every `period` meters perpendicular to it.
struct StripePattern {
    double period = 4.0;
    double width = 1.0;
    double heading = 0.0;  // radians, world frame
};

struct CrossingRect {
    double cx = 0, cy = 0;  // center, world meters
    double sx = 0, sy = 0;  // full extents
};

/// Axis-aligned vertical box standing on the ground plane's z=0 level.
struct OccluderBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    double height = 0;
};

/// Synthetic scene: both the renderer and the BEV oracle evaluate the
/// same closed-form texture, so projection error is the only error
/// source in comparisons. Channel layout: 0 = stripes, 1 = crossings,
/// 2 = flat background; occluder hits render as (0, 0, 1).
struct SceneSpec {
    static constexpr uint32_t kChannels = 3;

    double background = 0.2;
    std::vector<StripePattern> stripes;
    std::vector<CrossingRect> crossings;
    GroundPlane true_plane = GroundPlane::flat();  // world frame
    std::vector<OccluderBox> occluders;
    uint64_t seed = 0;

    /// Ground color at a world point (texture only, no occluders).
    void texture(double x, double y, float out[kChannels]) const;
};

// Scene config grammar ('#' comments, one directive per line):
//   background <level>
//   stripes <period> <width> <heading_deg>
//   crossing <cx> <cy> <sx> <sy>
//   plane <nx> <ny> <nz> <offset>
//   plane_pitch <deg> <axis_yaw_deg>
//   occluder <x_min> <y_min> <x_max> <y_max> <height>
//   seed <n>
// Malformed lines raise ConfigError with the line number.
SceneSpec parse_scene(const std::filesystem::path& path);
SceneSpec parse_scene_text(const std::string& text, const std::string& origin);

/// Raycast render at feature resolution: nearest surface wins (occluder
/// faces before ground), ground hits sample the texture analytically,
/// sky pixels are 0. `pose` places the ego in the world frame.
Tensor render_camera(const SceneSpec& scene, const CameraRig& rig,
                     const EgoPose& pose = {});

/// Ground-truth BEV: texture evaluated at each cell center, no cameras.
Tensor rasterize_bev_oracle(const SceneSpec& scene, const BevGridSpec& grid,
                            const EgoPose& pose = {});

/// True exactly where render_camera hit an occluder.
std::vector<uint8_t> occluder_image_mask(const SceneSpec& scene,
                                         const CameraRig& rig,
                                         const EgoPose& pose = {});

struct ScoreReport {
    double mse = 0;
    double psnr_db = 0;  // +inf when mse is 0
    double iou = 0;      // at threshold 0.5, over (cell, channel) pairs
    size_t valid_cells = 0;
};

/// Metrics over valid cells only; shapes must match.
ScoreReport score(const Tensor& recon, const Tensor& oracle,
                  const std::vector<uint8_t>& valid);

/// 3x3 erosion; scoring defaults drop a 1-cell border to exclude
/// point-sampling aliasing at pattern edges.
std::vector<uint8_t> erode_mask(const std::vector<uint8_t>& mask, uint32_t h,
                                uint32_t w);

/// Cells whose center lies within `max_range` meters of the ego origin.
std::vector<uint8_t> range_mask(const BevGridSpec& grid, double max_range);

std::vector<uint8_t> intersect_masks(const std::vector<uint8_t>& a,
                                     const std::vector<uint8_t>& b);

}  // namespace bevproj
