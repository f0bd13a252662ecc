#include "bevproj/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "bevproj/errors.hpp"
#include "bevproj/parallel.hpp"

namespace bevproj {

void SceneSpec::texture(double x, double y, float out[kChannels]) const {
    const float bg = float(background);
    out[0] = bg;
    out[1] = bg;
    out[2] = bg;
    for (const StripePattern& s : stripes) {
        // signed distance across the stripe direction
        const double lateral = -x * std::sin(s.heading) + y * std::cos(s.heading);
        const double m = lateral - s.period * std::floor(lateral / s.period);
        if (m < s.width) {
            out[0] = 1.0f;
            break;
        }
    }
    for (const CrossingRect& c : crossings) {
        if (std::abs(x - c.cx) <= c.sx * 0.5 && std::abs(y - c.cy) <= c.sy * 0.5) {
            out[1] = 1.0f;
            break;
        }
    }
}

namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();

// Slab test against the vertical box [x0,x1]x[y0,y1]x[z0, z0+height],
// where z0 is the plane level under the box center. Returns entry
// distance or kNoHit.
double ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
               const OccluderBox& box, double z0) {
    double tmin = 0.0, tmax = kNoHit;
    const double lo[3] = {box.x_min, box.y_min, z0};
    const double hi[3] = {box.x_max, box.y_max, z0 + box.height};
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dir[a]) < 1e-12) {
            if (origin[a] < lo[a] || origin[a] > hi[a]) return kNoHit;
            continue;
        }
        double t0 = (lo[a] - origin[a]) / dir[a];
        double t1 = (hi[a] - origin[a]) / dir[a];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return kNoHit;
    }
    return tmin > 0 ? tmin : kNoHit;
}

struct Hit {
    double t = kNoHit;
    bool occluder = false;
    Eigen::Vector3d point{0, 0, 0};
};

Hit trace(const SceneSpec& scene, const Eigen::Vector3d& origin,
          const Eigen::Vector3d& dir) {
    Hit hit;
    const double denom = scene.true_plane.normal.dot(dir);
    if (std::abs(denom) > 1e-12) {
        const double s =
            (scene.true_plane.offset - scene.true_plane.normal.dot(origin)) / denom;
        if (s > 0) {
            hit.t = s;
            hit.point = origin + s * dir;
        }
    }
    for (const OccluderBox& box : scene.occluders) {
        const double z0 = scene.true_plane.height_at((box.x_min + box.x_max) / 2,
                                                     (box.y_min + box.y_max) / 2);
        const double t = ray_box(origin, dir, box, z0);
        if (t < hit.t) {
            hit.t = t;
            hit.occluder = true;
            hit.point = origin + t * dir;
        }
    }
    return hit;
}

}  // namespace

Tensor render_camera(const SceneSpec& scene, const CameraRig& rig,
                     const EgoPose& pose) {
    Tensor img({SceneSpec::kChannels, rig.H, rig.W});
    const size_t plane = size_t(rig.H) * rig.W;
    // ego -> world
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    Eigen::Matrix3d ego_to_world;
    ego_to_world << c, -s, 0, s, c, 0, 0, 0, 1;
    const Eigen::Vector3d ego_origin(pose.x, pose.y, 0);
    const Eigen::Vector3d cam_world = ego_to_world * rig.t + ego_origin;

    parallel_for(rig.H, [&](size_t v_begin, size_t v_end) {
        for (size_t v = v_begin; v < v_end; ++v) {
            for (uint32_t u = 0; u < rig.W; ++u) {
                const Eigen::Vector3d dir =
                    ego_to_world * (rig.R * rig.pixel_ray(double(u), double(v)));
                const Hit hit = trace(scene, cam_world, dir);
                const size_t idx = v * rig.W + u;
                if (hit.t == kNoHit) continue;  // sky: zeros
                if (hit.occluder) {
                    img.data()[2 * plane + idx] = 1.0f;
                } else {
                    float tex[SceneSpec::kChannels];
                    scene.texture(hit.point.x(), hit.point.y(), tex);
                    for (uint32_t ch = 0; ch < SceneSpec::kChannels; ++ch)
                        img.data()[ch * plane + idx] = tex[ch];
                }
            }
        }
    });
    return img;
}

Tensor rasterize_bev_oracle(const SceneSpec& scene, const BevGridSpec& grid,
                            const EgoPose& pose) {
    Tensor out({SceneSpec::kChannels, grid.h, grid.w});
    const size_t cells = grid.cells();
    for (uint32_t i = 0; i < grid.h; ++i) {
        for (uint32_t j = 0; j < grid.w; ++j) {
            const Eigen::Vector2d ego_pt = grid.cell_center(i, j);
            const Eigen::Vector2d world = apply_pose(pose, ego_pt);
            float tex[SceneSpec::kChannels];
            scene.texture(world.x(), world.y(), tex);
            const size_t idx = size_t(i) * grid.w + j;
            for (uint32_t ch = 0; ch < SceneSpec::kChannels; ++ch)
                out.data()[ch * cells + idx] = tex[ch];
        }
    }
    return out;
}

std::vector<uint8_t> occluder_image_mask(const SceneSpec& scene,
                                         const CameraRig& rig,
                                         const EgoPose& pose) {
    std::vector<uint8_t> mask(size_t(rig.H) * rig.W, 0);
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    Eigen::Matrix3d ego_to_world;
    ego_to_world << c, -s, 0, s, c, 0, 0, 0, 1;
    const Eigen::Vector3d cam_world =
        ego_to_world * rig.t + Eigen::Vector3d(pose.x, pose.y, 0);
    for (uint32_t v = 0; v < rig.H; ++v) {
        for (uint32_t u = 0; u < rig.W; ++u) {
            const Eigen::Vector3d dir =
                ego_to_world * (rig.R * rig.pixel_ray(double(u), double(v)));
            const Hit hit = trace(scene, cam_world, dir);
            if (hit.t != kNoHit && hit.occluder) mask[size_t(v) * rig.W + u] = 1;
        }
    }
    return mask;
}

ScoreReport score(const Tensor& recon, const Tensor& oracle,
                  const std::vector<uint8_t>& valid) {
    if (!recon.same_shape(oracle))
        throw std::invalid_argument("score: shape mismatch");
    const uint32_t C = recon.dim(0);
    const size_t cells = recon.plane_size();
    if (valid.size() != cells)
        throw std::invalid_argument("score: valid mask size mismatch");

    ScoreReport r;
    double se = 0;
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < cells; ++i) {
        if (!valid[i]) continue;
        ++r.valid_cells;
        for (uint32_t c = 0; c < C; ++c) {
            const double a = recon.data()[c * cells + i];
            const double b = oracle.data()[c * cells + i];
            se += (a - b) * (a - b);
            const bool pa = a > 0.5, pb = b > 0.5;
            inter += pa && pb;
            uni += pa || pb;
        }
    }
    if (r.valid_cells == 0) return r;  // empty report
    r.mse = se / (double(r.valid_cells) * C);
    r.psnr_db = r.mse > 0 ? 10.0 * std::log10(1.0 / r.mse)
                          : std::numeric_limits<double>::infinity();
    r.iou = uni > 0 ? double(inter) / double(uni) : 1.0;
    return r;
}

std::vector<uint8_t> erode_mask(const std::vector<uint8_t>& mask, uint32_t h,
                                uint32_t w) {
    std::vector<uint8_t> out(mask.size(), 0);
    for (uint32_t i = 0; i < h; ++i) {
        for (uint32_t j = 0; j < w; ++j) {
            bool keep = true;
            for (int di = -1; di <= 1 && keep; ++di) {
                for (int dj = -1; dj <= 1 && keep; ++dj) {
                    const int ni = int(i) + di, nj = int(j) + dj;
                    if (ni < 0 || nj < 0 || ni >= int(h) || nj >= int(w) ||
                        !mask[size_t(ni) * w + nj])
                        keep = false;
                }
            }
            if (keep) out[size_t(i) * w + j] = 1;
        }
    }
    return out;
}

std::vector<uint8_t> range_mask(const BevGridSpec& grid, double max_range) {
    std::vector<uint8_t> out(grid.cells(), 0);
    for (uint32_t i = 0; i < grid.h; ++i)
        for (uint32_t j = 0; j < grid.w; ++j)
            if (grid.cell_center(i, j).norm() <= max_range)
                out[size_t(i) * grid.w + j] = 1;
    return out;
}

std::vector<uint8_t> intersect_masks(const std::vector<uint8_t>& a,
                                     const std::vector<uint8_t>& b) {
    std::vector<uint8_t> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
    return out;
}

SceneSpec parse_scene_text(const std::string& text, const std::string& origin) {
    SceneSpec scene;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
    };
    const double deg = std::numbers::pi / 180.0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        auto num = [&]() {
            double v;
            if (!(ls >> v) || !std::isfinite(v)) fail("expected a numeric value after '" + key + "'");
            return v;
        };
        if (key == "background") {
            scene.background = num();
            if (scene.background < 0 || scene.background > 1)
                fail("background must be in [0, 1]");
        } else if (key == "stripes") {
            StripePattern s;
            s.period = num();
            s.width = num();
            s.heading = num() * deg;
            if (s.period <= 0 || s.width <= 0 || s.width > s.period)
                fail("stripes need 0 < width <= period");
            scene.stripes.push_back(s);
        } else if (key == "crossing") {
            CrossingRect c;
            c.cx = num();
            c.cy = num();
            c.sx = num();
            c.sy = num();
            if (c.sx <= 0 || c.sy <= 0) fail("crossing extents must be positive");
            scene.crossings.push_back(c);
        } else if (key == "plane") {
            GroundPlane p;
            p.normal.x() = num();
            p.normal.y() = num();
            p.normal.z() = num();
            p.offset = num();
            if (p.normal.norm() < 1e-12) fail("plane normal must be nonzero");
            p.offset /= p.normal.norm();
            p.normal.normalize();
            scene.true_plane = p;
        } else if (key == "plane_pitch") {
            const double pitch = num() * deg;
            const double axis = num() * deg;
            scene.true_plane = GroundPlane::pitched(pitch, axis);
        } else if (key == "occluder") {
            OccluderBox b;
            b.x_min = num();
            b.y_min = num();
            b.x_max = num();
            b.y_max = num();
            b.height = num();
            if (b.x_max <= b.x_min || b.y_max <= b.y_min || b.height <= 0)
                fail("occluder box is degenerate");
            scene.occluders.push_back(b);
        } else if (key == "seed") {
            scene.seed = uint64_t(num());
        } else {
            fail("unknown directive '" + key + "'");
        }
    }
    return scene;
}

SceneSpec parse_scene(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open scene file: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_scene_text(buf.str(), path.string());
}

}  // namespace bevproj
