#include "bevproj/fields.hpp"

#include <algorithm>
#include <cmath>

#include "bevproj/errors.hpp"
#include "bevproj/sampling.hpp"

namespace bevproj {

void FieldSet::validate() const {
    auto expect = [&](const Tensor& t, uint32_t channels, const char* what) {
        const bool ok = channels == 1
                            ? (t.rank() == 2 && t.dim(0) == H && t.dim(1) == W)
                            : (t.rank() == 3 && t.dim(0) == channels &&
                               t.dim(1) == H && t.dim(2) == W);
        if (!ok) throw FormatError(std::string("field set: bad shape for ") + what);
        if (!t.all_finite())
            throw FormatError(std::string("field set: non-finite entries in ") + what);
    };
    expect(mu_prime, 2, "mu_prime");
    expect(sigma_prime, 3, "sigma_prime");
    expect(alpha_prime, 1, "alpha_prime");
    const size_t n = size_t(H) * W;
    for (size_t i = 0; i < n; ++i) {
        if (sigma_prime.data()[i] < kSigmaMin ||
            sigma_prime.data()[2 * n + i] < kSigmaMin)
            throw FormatError("field set: sigma_prime diagonal below sigma_min");
        const float a = alpha_prime.data()[i];
        if (a < 0.0f || a > 1.0f)
            throw FormatError("field set: alpha_prime outside [0, 1]");
    }
}

namespace {

FieldSet blank_fields(const CameraRig& rig) {
    FieldSet f;
    f.H = rig.H;
    f.W = rig.W;
    f.mu_prime = Tensor({2, rig.H, rig.W});
    f.sigma_prime = Tensor({3, rig.H, rig.W});
    f.alpha_prime = Tensor({rig.H, rig.W}, 1.0f);
    // default isotropic 1 px covariance
    const size_t n = size_t(rig.H) * rig.W;
    std::fill_n(f.sigma_prime.data(), n, 1.0f);
    std::fill_n(f.sigma_prime.data() + 2 * n, n, 1.0f);
    return f;
}

FieldSet make(const ZeroFields&, const CameraRig& rig) { return blank_fields(rig); }

FieldSet make(const ConstantFields& c, const CameraRig& rig) {
    FieldSet f = blank_fields(rig);
    const size_t n = size_t(rig.H) * rig.W;
    const float l11 = float(std::max(c.l11, kSigmaMin));
    const float l22 = float(std::max(c.l22, kSigmaMin));
    const float a = float(std::clamp(c.alpha, 0.0, 1.0));
    std::fill_n(f.mu_prime.data(), n, float(c.du));
    std::fill_n(f.mu_prime.data() + n, n, float(c.dv));
    std::fill_n(f.sigma_prime.data(), n, l11);
    std::fill_n(f.sigma_prime.data() + n, n, float(c.l21));
    std::fill_n(f.sigma_prime.data() + 2 * n, n, l22);
    std::fill_n(f.alpha_prime.data(), n, a);
    return f;
}

FieldSet make(const SlopeOracleFields& so, const CameraRig& rig) {
    FieldSet f = blank_fields(rig);
    const size_t n = size_t(rig.H) * rig.W;
    if (std::abs(so.assumed_plane.normal.z()) < 1e-12 ||
        std::abs(so.true_plane.normal.z()) < 1e-12)
        throw ConfigError("slope oracle: plane normal has no z component");
    const double n_dot_t = so.assumed_plane.normal.dot(rig.t);
    for (uint32_t v = 0; v < rig.H; ++v) {
        for (uint32_t u = 0; u < rig.W; ++u) {
            const Eigen::Vector3d d_ego = rig.R * rig.pixel_ray(u, v);
            const double denom = so.assumed_plane.normal.dot(d_ego);
            if (std::abs(denom) < 1e-12) continue;
            const double s = (so.assumed_plane.offset - n_dot_t) / denom;
            if (s <= 0) continue;  // sky pixel: no ground point, no correction
            const Eigen::Vector3d ground = rig.t + s * d_ego;
            const Eigen::Vector3d corrected(
                ground.x(), ground.y(),
                so.true_plane.height_at(ground.x(), ground.y()));
            const Eigen::Vector3d p_cam = rig.to_camera(corrected);
            if (!(p_cam.z() > 0)) continue;
            const Eigen::Vector2d uv = rig.project(p_cam);
            const size_t idx = size_t(v) * rig.W + u;
            f.mu_prime.data()[idx] = float(uv.x() - u);
            f.mu_prime.data()[n + idx] = float(uv.y() - v);
        }
    }
    return f;
}

FieldSet make(const OccluderMaskFields& om, const CameraRig& rig) {
    FieldSet f = blank_fields(rig);
    if (om.mask) {
        if (om.mask->size() != size_t(rig.H) * rig.W)
            throw FormatError("occluder mask: size does not match rig H*W");
        for (size_t i = 0; i < om.mask->size(); ++i)
            if ((*om.mask)[i]) f.alpha_prime.data()[i] = 0.0f;
    }
    for (const PixelRect& r : om.rects) {
        for (uint32_t v = 0; v < rig.H; ++v) {
            if (v < r.v0 || v > r.v1) continue;
            for (uint32_t u = 0; u < rig.W; ++u)
                if (u >= r.u0 && u <= r.u1) f.alpha_prime.at(v, u) = 0.0f;
        }
    }
    return f;
}

FieldSet make(const LoadedFields& lf, const CameraRig& rig) {
    FieldSet f;
    f.H = rig.H;
    f.W = rig.W;
    f.mu_prime = read_bvt(lf.mu_path);
    f.sigma_prime = read_bvt(lf.sigma_path);
    f.alpha_prime = read_bvt(lf.alpha_path);
    auto shape_ok = [&](const Tensor& t, uint32_t channels) {
        return channels == 1 ? (t.rank() == 2 && t.dim(0) == rig.H && t.dim(1) == rig.W)
                             : (t.rank() == 3 && t.dim(0) == channels &&
                                t.dim(1) == rig.H && t.dim(2) == rig.W);
    };
    if (!shape_ok(f.mu_prime, 2))
        throw FormatError("loaded fields: mu_prime must be 2 x H x W for this rig");
    if (!shape_ok(f.sigma_prime, 3))
        throw FormatError("loaded fields: sigma_prime must be 3 x H x W for this rig");
    if (!shape_ok(f.alpha_prime, 1))
        throw FormatError("loaded fields: alpha_prime must be H x W for this rig");
    if (!f.mu_prime.all_finite() || !f.sigma_prime.all_finite() ||
        !f.alpha_prime.all_finite())
        throw FormatError("loaded fields: non-finite entries");
    const size_t n = size_t(rig.H) * rig.W;
    for (size_t i = 0; i < n; ++i) {
        float& l11 = f.sigma_prime.data()[i];
        float& l22 = f.sigma_prime.data()[2 * n + i];
        l11 = std::max(l11, float(kSigmaMin));
        l22 = std::max(l22, float(kSigmaMin));
        float& a = f.alpha_prime.data()[i];
        a = std::clamp(a, 0.0f, 1.0f);
    }
    return f;
}

}  // namespace

FieldSet provide_fields(const FieldProvider& provider, const CameraRig& rig,
                        const std::vector<double>& dmask) {
    if (dmask.size() != size_t(rig.H) * rig.W)
        throw std::invalid_argument("provide_fields: dmask size must be H*W");
    FieldSet f = std::visit([&rig](const auto& p) { return make(p, rig); }, provider);
    f.validate();
    return f;
}

ProjectedParams project_params(const FieldSet& fields, const PullMap& pull) {
    ProjectedParams out;
    out.h = pull.h;
    out.w = pull.w;
    const size_t cells = size_t(pull.h) * pull.w;
    out.mu.assign(cells * 2, -1.0);
    out.sigma.assign(cells * 3, kSigmaMin);
    out.valid.assign(cells, 0);

    const size_t plane = size_t(fields.H) * fields.W;
    const float* mu_u = fields.mu_prime.data();
    const float* mu_v = fields.mu_prime.data() + plane;
    const float* sig = fields.sigma_prime.data();

    for (size_t i = 0; i < cells; ++i) {
        if (!pull.valid[i]) continue;
        const double pu = pull.u(i);
        const double pv = pull.v(i);
        const BilinearTap off_tap = BilinearTap::at(pu, pv, fields.H, fields.W);
        // pull coords are in-image by construction
        const double u = pu + off_tap.apply(mu_u);
        const double v = pv + off_tap.apply(mu_v);
        const BilinearTap sig_tap = BilinearTap::at(u, v, fields.H, fields.W);
        if (!sig_tap.in_bounds) continue;  // updated location left the image
        out.mu[2 * i] = u;
        out.mu[2 * i + 1] = v;
        out.sigma[3 * i] = std::max(sig_tap.apply(sig), kSigmaMin);
        out.sigma[3 * i + 1] = sig_tap.apply(sig + plane);
        out.sigma[3 * i + 2] = std::max(sig_tap.apply(sig + 2 * plane), kSigmaMin);
        out.valid[i] = 1;
    }
    return out;
}

}  // namespace bevproj
