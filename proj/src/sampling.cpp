#include "bevproj/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bevproj {

double gaussian_pdf2(const Eigen::Vector2d& loc, const Gauss2& g) {
    // Solve L z = (loc - mean) by forward substitution.
    const double d0 = loc.x() - g.mean.x();
    const double d1 = loc.y() - g.mean.y();
    const double z0 = d0 / g.l11;
    const double z1 = (d1 - g.l21 * z0) / g.l22;
    const double quad = z0 * z0 + z1 * z1;
    const double det_l = g.l11 * g.l22;  // sqrt(det Sigma)
    return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * det_l);
}

namespace rng {

uint64_t mix(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t key(uint64_t seed, uint64_t stream, uint64_t counter) {
    return mix(mix(mix(seed) ^ stream) ^ counter);
}

namespace {
double to_unit(uint64_t x) {
    // 53-bit mantissa, offset half a step: strictly inside (0, 1).
    return (double(x >> 11) + 0.5) * 0x1p-53;
}
}  // namespace

double uniform01(uint64_t seed, uint64_t stream, uint64_t counter) {
    return to_unit(key(seed, stream, counter));
}

Eigen::Vector2d normal_pair(uint64_t seed, uint64_t stream, uint64_t counter) {
    const uint64_t k = key(seed, stream, counter);
    const double u1 = to_unit(k);
    const double u2 = to_unit(mix(k));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace rng

void draw_samples(const Gauss2& g, int k_count, SampleMode mode, uint64_t seed,
                  uint64_t cell_id, std::vector<Eigen::Vector2d>* out) {
    if (k_count < 1) throw std::invalid_argument("draw_samples: K must be >= 1");
    out->clear();
    out->reserve(k_count);
    auto through_l = [&g](const Eigen::Vector2d& z) -> Eigen::Vector2d {
        return {g.mean.x() + g.l11 * z.x(),
                g.mean.y() + g.l21 * z.x() + g.l22 * z.y()};
    };
    if (mode == SampleMode::Deterministic) {
        out->push_back(g.mean);  // first sample exactly the mean
        for (int j = 0; j + 1 < k_count; ++j) {
            const double a = 2.0 * std::numbers::pi * j / (k_count - 1);
            out->push_back(through_l({std::cos(a), std::sin(a)}));
        }
    } else {
        for (int k = 0; k < k_count; ++k)
            out->push_back(through_l(rng::normal_pair(seed, cell_id, uint64_t(k))));
    }
}

BilinearTap BilinearTap::at(double u, double v, uint32_t H, uint32_t W) {
    BilinearTap tap;
    if (!(u >= 0.0 && u <= double(W - 1) && v >= 0.0 && v <= double(H - 1)))
        return tap;  // all weights zero, indices 0
    tap.in_bounds = true;
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    uint32_t u0 = uint32_t(fu);
    uint32_t v0 = uint32_t(fv);
    const double du = u - fu;
    const double dv = v - fv;
    const uint32_t u1 = (u0 + 1 < W) ? u0 + 1 : u0;  // weight 0 when clamped
    const uint32_t v1 = (v0 + 1 < H) ? v0 + 1 : v0;
    tap.i00 = size_t(v0) * W + u0;
    tap.i01 = size_t(v0) * W + u1;
    tap.i10 = size_t(v1) * W + u0;
    tap.i11 = size_t(v1) * W + u1;
    tap.w00 = (1.0 - du) * (1.0 - dv);
    tap.w01 = du * (1.0 - dv);
    tap.w10 = (1.0 - du) * dv;
    tap.w11 = du * dv;
    return tap;
}

bool bilinear_sample(const float* field, uint32_t C, uint32_t H, uint32_t W,
                     double u, double v, double* out) {
    const BilinearTap tap = BilinearTap::at(u, v, H, W);
    if (!tap.in_bounds) {
        for (uint32_t c = 0; c < C; ++c) out[c] = 0.0;
        return false;
    }
    const size_t stride = size_t(H) * W;
    for (uint32_t c = 0; c < C; ++c) out[c] = tap.apply(field + c * stride);
    return true;
}

double bilinear_sample1(const float* plane, uint32_t H, uint32_t W, double u,
                        double v, bool* in_bounds) {
    const BilinearTap tap = BilinearTap::at(u, v, H, W);
    if (in_bounds) *in_bounds = tap.in_bounds;
    return tap.in_bounds ? tap.apply(plane) : 0.0;
}

}  // namespace bevproj
