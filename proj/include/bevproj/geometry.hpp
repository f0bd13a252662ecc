#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bevproj/tensor.hpp"

namespace bevproj {

// Conventions used throughout:
//   ego frame    x forward, y left, z up (meters)
//   image plane  u rightward, v downward (pixels), pixel centers at
//                integer coordinates
//   camera frame x right, y down, z along the optical axis
// The BEV grid covers x in [x_min, x_max] (rows) and y in [y_min, y_max]
// (columns); cell (i, j) is centered at
//   (x_min + (i + 0.5) * cell, y_min + (j + 0.5) * cell).

/// Distance stored for pixels whose ray never reaches the ground plane.
inline constexpr double kMaxDist = 1e4;

/// Pinhole camera: intrinsics at feature-map resolution plus the SE(3)
/// camera-to-ego transform.
struct CameraRig {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    uint32_t H = 0, W = 0;  // feature rows (v), columns (u)
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // camera -> ego
    Eigen::Vector3d t = Eigen::Vector3d::Zero();      // camera center, ego frame
    std::string name;

    /// Throws ConfigError naming the offending field. Rotations must be
    /// orthonormal within `rot_tol` (infinity norm) with det +1.
    void validate(double rot_tol = 1e-9) const;

    Eigen::Vector3d to_camera(const Eigen::Vector3d& p_ego) const {
        return R.transpose() * (p_ego - t);
    }
    Eigen::Vector3d to_ego(const Eigen::Vector3d& p_cam) const {
        return R * p_cam + t;
    }
    /// Projects a camera-frame point; caller checks depth > 0 separately.
    Eigen::Vector2d project(const Eigen::Vector3d& p_cam) const {
        return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
    }
    /// Unit ray direction through pixel (u, v), camera frame.
    Eigen::Vector3d pixel_ray(double u, double v) const {
        return Eigen::Vector3d((u - cx) / fx, (v - cy) / fy, 1.0).normalized();
    }
};

struct BevGridSpec {
    double x_min = -30, x_max = 30;
    double y_min = -15, y_max = 15;
    double cell = 0.5;
    uint32_t h = 120, w = 60;

    static BevGridSpec from_ranges(double x_min, double x_max, double y_min,
                                   double y_max, double cell);

    Eigen::Vector2d cell_center(uint32_t i, uint32_t j) const {
        return {x_min + (i + 0.5) * cell, y_min + (j + 0.5) * cell};
    }
    /// Continuous (row, col) cell coordinates of a metric point; the exact
    /// inverse of cell_center.
    Eigen::Vector2d cell_coords(double x, double y) const {
        return {(x - x_min) / cell - 0.5, (y - y_min) / cell - 0.5};
    }
    size_t cells() const { return size_t(h) * w; }
};

/// Ground plane n . p = offset in the frame it is used in (ego for pull
/// maps, world for synthetic scenes).
struct GroundPlane {
    Eigen::Vector3d normal{0, 0, 1};
    double offset = 0;

    static GroundPlane flat(double z = 0) { return {{0, 0, 1}, z}; }
    /// Plane pitched by `pitch_rad` about an axis in the xy-plane at
    /// `axis_yaw` from +x. axis_yaw 0 tilts the ground up along +x.
    static GroundPlane pitched(double pitch_rad, double axis_yaw = 0);

    double height_at(double x, double y) const {
        return (offset - normal.x() * x - normal.y() * y) / normal.z();
    }
};

struct EgoPose {
    double x = 0, y = 0, yaw = 0;  // world frame, yaw in (-pi, pi]
};

double wrap_angle(double a);
/// a then b seen from a's parent frame: result maps b-frame coords through
/// a (result = a * b as SE(2) matrices).
EgoPose compose(const EgoPose& a, const EgoPose& b);
EgoPose inverse(const EgoPose& p);
Eigen::Vector2d apply_pose(const EgoPose& p, const Eigen::Vector2d& pt);

/// Per-BEV-cell image coordinates from which the static projection pulls
/// features, with the cells that actually see the plane marked valid.
struct PullMap {
    uint32_t h = 0, w = 0;
    std::vector<double> coords;  // h*w*2, (u, v); (-1,-1) where invalid
    std::vector<uint8_t> valid;  // 1 iff positive depth and inside [0,W-1]x[0,H-1]

    double u(size_t idx) const { return coords[2 * idx]; }
    double v(size_t idx) const { return coords[2 * idx + 1]; }
};

/// Projects every cell center (dropped onto the plane) through the camera.
PullMap build_pull_map(const CameraRig& rig, const BevGridSpec& grid,
                       const GroundPlane& plane);

/// Per-pixel distance from the camera center to the ground along the
/// pixel ray; kMaxDist at and above the horizon. Row-major H*W.
std::vector<double> build_distance_mask(const CameraRig& rig,
                                        const GroundPlane& plane);

/// Resamples a (C,h,w) or (h,w) BEV tensor into the current ego frame.
/// `delta` is the SE(2) motion from the tensor's frame to the current
/// frame; samples falling outside the source grid become 0.
Tensor warp_bev(const BevGridSpec& grid, const EgoPose& delta, const Tensor& src);

}  // namespace bevproj
