#include "bevproj/geometry.hpp"

#include <cmath>
#include <numbers>

#include "bevproj/errors.hpp"
#include "bevproj/parallel.hpp"
#include "bevproj/sampling.hpp"

namespace bevproj {

void CameraRig::validate(double rot_tol) const {
    auto fail = [this](const std::string& what) {
        throw ConfigError("camera '" + (name.empty() ? "?" : name) + "': " + what);
    };
    if (!(fx > 0)) fail("fx must be > 0");
    if (!(fy > 0)) fail("fy must be > 0");
    if (H == 0 || W == 0) fail("H and W must be positive");
    if (!(cx >= 0 && cx < W)) fail("cx out of range [0, W)");
    if (!(cy >= 0 && cy < H)) fail("cy out of range [0, H)");
    if (!t.allFinite() || !R.allFinite()) fail("pose has non-finite entries");
    const Eigen::Matrix3d err = R.transpose() * R - Eigen::Matrix3d::Identity();
    if (err.cwiseAbs().maxCoeff() >= rot_tol)
        fail("pose rotation is not orthonormal");
    if (R.determinant() < 0) fail("pose rotation has det -1 (reflection)");
}

BevGridSpec BevGridSpec::from_ranges(double x_min, double x_max, double y_min,
                                     double y_max, double cell) {
    if (!(cell > 0)) throw ConfigError("grid: cell size must be > 0");
    if (!(x_max > x_min) || !(y_max > y_min))
        throw ConfigError("grid: empty metric extent");
    BevGridSpec g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.y_min = y_min;
    g.y_max = y_max;
    g.cell = cell;
    g.h = uint32_t(std::lround((x_max - x_min) / cell));
    g.w = uint32_t(std::lround((y_max - y_min) / cell));
    if (g.h == 0 || g.w == 0) throw ConfigError("grid: resolution rounds to zero");
    return g;
}

GroundPlane GroundPlane::pitched(double pitch_rad, double axis_yaw) {
    const Eigen::Vector3d axis(-std::sin(axis_yaw), std::cos(axis_yaw), 0.0);
    GroundPlane p;
    p.normal = Eigen::AngleAxisd(-pitch_rad, axis) * Eigen::Vector3d::UnitZ();
    p.offset = 0;
    return p;
}

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

EgoPose compose(const EgoPose& a, const EgoPose& b) {
    const double c = std::cos(a.yaw), s = std::sin(a.yaw);
    return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
            wrap_angle(a.yaw + b.yaw)};
}

EgoPose inverse(const EgoPose& p) {
    const double c = std::cos(p.yaw), s = std::sin(p.yaw);
    return {-(c * p.x + s * p.y), -(-s * p.x + c * p.y), wrap_angle(-p.yaw)};
}

Eigen::Vector2d apply_pose(const EgoPose& p, const Eigen::Vector2d& pt) {
    const double c = std::cos(p.yaw), s = std::sin(p.yaw);
    return {p.x + c * pt.x() - s * pt.y(), p.y + s * pt.x() + c * pt.y()};
}

PullMap build_pull_map(const CameraRig& rig, const BevGridSpec& grid,
                       const GroundPlane& plane) {
    rig.validate(1e-6);
    PullMap pm;
    pm.h = grid.h;
    pm.w = grid.w;
    pm.coords.assign(grid.cells() * 2, -1.0);
    pm.valid.assign(grid.cells(), 0);
    if (std::abs(plane.normal.z()) < 1e-12) return pm;  // vertical plane: nothing to pull

    for (uint32_t i = 0; i < grid.h; ++i) {
        for (uint32_t j = 0; j < grid.w; ++j) {
            const Eigen::Vector2d xy = grid.cell_center(i, j);
            const Eigen::Vector3d p_ego(xy.x(), xy.y(),
                                        plane.height_at(xy.x(), xy.y()));
            const Eigen::Vector3d p_cam = rig.to_camera(p_ego);
            if (!(p_cam.z() > 0)) continue;
            const Eigen::Vector2d uv = rig.project(p_cam);
            const size_t idx = size_t(i) * grid.w + j;
            if (uv.x() >= 0 && uv.x() <= rig.W - 1 && uv.y() >= 0 &&
                uv.y() <= rig.H - 1) {
                pm.coords[2 * idx] = uv.x();
                pm.coords[2 * idx + 1] = uv.y();
                pm.valid[idx] = 1;
            }
        }
    }
    return pm;
}

std::vector<double> build_distance_mask(const CameraRig& rig,
                                        const GroundPlane& plane) {
    rig.validate(1e-6);
    std::vector<double> dist(size_t(rig.H) * rig.W, kMaxDist);
    const double n_dot_t = plane.normal.dot(rig.t);
    for (uint32_t v = 0; v < rig.H; ++v) {
        for (uint32_t u = 0; u < rig.W; ++u) {
            const Eigen::Vector3d d_ego = rig.R * rig.pixel_ray(u, v);
            const double denom = plane.normal.dot(d_ego);
            if (std::abs(denom) < 1e-12) continue;  // ray parallel to plane
            const double s = (plane.offset - n_dot_t) / denom;
            if (s > 0) dist[size_t(v) * rig.W + u] = std::min(s, kMaxDist);
        }
    }
    return dist;
}

Tensor warp_bev(const BevGridSpec& grid, const EgoPose& delta, const Tensor& src) {
    const bool has_channels = src.rank() == 3;
    if (!((src.rank() == 2 && src.dim(0) == grid.h && src.dim(1) == grid.w) ||
          (has_channels && src.dim(1) == grid.h && src.dim(2) == grid.w)))
        throw std::invalid_argument("warp_bev: tensor shape does not match grid");
    if (delta.x == 0 && delta.y == 0 && delta.yaw == 0) return src;
    const uint32_t channels = has_channels ? src.dim(0) : 1;
    Tensor out(src.dims());
    const EgoPose inv = inverse(delta);
    const size_t plane_sz = size_t(grid.h) * grid.w;

    parallel_for(grid.h, [&](size_t row_begin, size_t row_end) {
        for (size_t i = row_begin; i < row_end; ++i) {
            for (uint32_t j = 0; j < grid.w; ++j) {
                const Eigen::Vector2d p = grid.cell_center(uint32_t(i), j);
                const Eigen::Vector2d s = apply_pose(inv, p);
                const Eigen::Vector2d rc = grid.cell_coords(s.x(), s.y());
                // u axis = column, v axis = row on the BEV grid
                const BilinearTap tap =
                    BilinearTap::at(rc.y(), rc.x(), grid.h, grid.w);
                const size_t idx = i * grid.w + j;
                if (!tap.in_bounds) continue;  // zero fill
                for (uint32_t c = 0; c < channels; ++c) {
                    const float* sp = src.data() + c * plane_sz;
                    out.data()[c * plane_sz + idx] = float(tap.apply(sp));
                }
            }
        }
    });
    return out;
}

}  // namespace bevproj
