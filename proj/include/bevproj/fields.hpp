#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "bevproj/geometry.hpp"
#include "bevproj/tensor.hpp"

namespace bevproj {

/// Image-space probabilistic-projection parameters for one camera.
/// Offsets are absolute pixels; sigma_prime carries Cholesky entries
/// (l11, l21, l22) so any bilinear interpolation of it stays SPD.
struct FieldSet {
    uint32_t H = 0, W = 0;
    Tensor mu_prime;     // 2 x H x W, (du, dv) px
    Tensor sigma_prime;  // 3 x H x W, diagonals >= kSigmaMin
    Tensor alpha_prime;  // H x W, in [0, 1]

    void validate() const;  // throws FormatError on shape/finiteness issues
};

/// Eqs.-updated per-cell parameters on the BEV grid.
struct ProjectedParams {
    uint32_t h = 0, w = 0;
    std::vector<double> mu;     // h*w*2, (u, v) px
    std::vector<double> sigma;  // h*w*3, (l11, l21, l22) px
    std::vector<uint8_t> valid;
};

// Field providers: pluggable sources of (mu', Sigma', alpha').

/// mu' = 0, Sigma' = (1, 0, 1) px, alpha' = 1.
struct ZeroFields {};

/// Broadcast constants; diagonals clamped to kSigmaMin, alpha to [0, 1].
struct ConstantFields {
    double du = 0, dv = 0;
    double l11 = 1, l21 = 0, l22 = 1;
    double alpha = 1;
};

/// Closed-form offsets that undo a wrong ground-plane assumption: for each
/// pixel, back-project onto the assumed plane, re-project the true-plane
/// point at the same (x, y), and store the image-coordinate difference.
struct SlopeOracleFields {
    GroundPlane true_plane;
    GroundPlane assumed_plane;
};

struct PixelRect {
    double u0 = 0, v0 = 0, u1 = 0, v1 = 0;  // inclusive pixel bounds
};

/// alpha' = 0 inside the listed rectangles and wherever `mask` is set,
/// 1 elsewhere; mu' = 0.
struct OccluderMaskFields {
    std::vector<PixelRect> rects;
    std::optional<std::vector<uint8_t>> mask;  // H*W row-major
};

/// Reads the three maps from BVT1 tensor files.
struct LoadedFields {
    std::filesystem::path mu_path;
    std::filesystem::path sigma_path;
    std::filesystem::path alpha_path;
};

using FieldProvider = std::variant<ZeroFields, ConstantFields, SlopeOracleFields,
                                   OccluderMaskFields, LoadedFields>;

/// Produces a FieldSet for the rig's resolution. `dmask` is the H*W
/// distance mask; providers may ignore it.
FieldSet provide_fields(const FieldProvider& provider, const CameraRig& rig,
                        const std::vector<double>& dmask);

/// Eq.-ordered parameter update: offsets sampled at the static pull map,
/// added residually, covariance sampled at the *updated* locations. Cells
/// whose updated location leaves the image become invalid.
ProjectedParams project_params(const FieldSet& fields, const PullMap& pull);

}  // namespace bevproj
