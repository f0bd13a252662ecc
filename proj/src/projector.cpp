#include "bevproj/projector.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "bevproj/parallel.hpp"

namespace bevproj {

RawBev RawBev::zeros(uint32_t channels, uint32_t h, uint32_t w) {
    RawBev r;
    r.features = Tensor({channels, h, w});
    r.conf = Tensor({h, w});
    r.valid.assign(size_t(h) * w, 0);
    return r;
}

namespace {

struct SampleAccum {
    std::vector<Eigen::Vector2d> locs;
    std::vector<double> density;
};

// Shared Eq.-6 arithmetic for one cell. Returns alpha; writes the C
// accumulated feature values (doubles) and optionally per-sample weights.
double accumulate_cell(const Tensor& features, const Tensor& alpha_prime,
                       const Gauss2& g, int k_count, SampleMode mode,
                       uint64_t seed, uint64_t cell_id,
                       std::vector<Eigen::Vector2d>& locs, double* feat_out,
                       std::vector<double>* weights_out) {
    const uint32_t C = features.dim(0);
    const uint32_t H = features.dim(1);
    const uint32_t W = features.dim(2);
    const size_t plane = size_t(H) * W;

    draw_samples(g, k_count, mode, seed, cell_id, &locs);

    double density_sum = 0;
    thread_local std::vector<double> density;
    density.assign(locs.size(), 0.0);
    for (size_t k = 0; k < locs.size(); ++k) {
        density[k] = gaussian_pdf2(locs[k], g);
        density_sum += density[k];
    }
    // The first deterministic sample sits at the mean and stochastic
    // densities are strictly positive, so the normalizer cannot vanish.
    assert(density_sum > 0);

    for (uint32_t c = 0; c < C; ++c) feat_out[c] = 0.0;
    if (weights_out) weights_out->assign(locs.size(), 0.0);

    double alpha = 0;
    for (size_t k = 0; k < locs.size(); ++k) {
        const BilinearTap tap = BilinearTap::at(locs[k].x(), locs[k].y(), H, W);
        if (!tap.in_bounds) continue;  // zero confidence and zero feature
        const double n_k = density[k] / density_sum;
        const double a_k = tap.apply(alpha_prime.data());
        const double w_k = n_k * a_k;
        if (weights_out) (*weights_out)[k] = w_k;
        alpha += w_k;
        for (uint32_t c = 0; c < C; ++c)
            feat_out[c] += w_k * tap.apply(features.data() + c * plane);
    }
    return alpha;
}

}  // namespace

RawBev prob_project(const Tensor& features, const ProjectedParams& params,
                    const Tensor& alpha_prime, int k_count, SampleMode mode,
                    uint64_t seed) {
    if (features.rank() != 3)
        throw std::invalid_argument("prob_project: features must be C x H x W");
    const uint32_t C = features.dim(0);
    const uint32_t H = features.dim(1);
    const uint32_t W = features.dim(2);
    if (alpha_prime.rank() != 2 || alpha_prime.dim(0) != H || alpha_prime.dim(1) != W)
        throw std::invalid_argument("prob_project: alpha_prime must be H x W");
    if (k_count < 1) throw std::invalid_argument("prob_project: K must be >= 1");

    RawBev out = RawBev::zeros(C, params.h, params.w);
    out.valid = params.valid;
    const size_t cells = size_t(params.h) * params.w;
    const size_t bev_plane = cells;

    parallel_for(cells, [&](size_t begin, size_t end) {
        std::vector<Eigen::Vector2d> locs;
        std::vector<double> feat(C);
        for (size_t i = begin; i < end; ++i) {
            if (!params.valid[i]) continue;
            Gauss2 g;
            g.mean = {params.mu[2 * i], params.mu[2 * i + 1]};
            g.l11 = params.sigma[3 * i];
            g.l21 = params.sigma[3 * i + 1];
            g.l22 = params.sigma[3 * i + 2];
            const double alpha =
                accumulate_cell(features, alpha_prime, g, k_count, mode, seed,
                                uint64_t(i), locs, feat.data(), nullptr);
            out.conf.data()[i] = float(alpha);
            for (uint32_t c = 0; c < C; ++c)
                out.features.data()[c * bev_plane + i] = float(feat[c]);
        }
    });
    return out;
}

RawBev static_project(const Tensor& features, const PullMap& pull) {
    if (features.rank() != 3)
        throw std::invalid_argument("static_project: features must be C x H x W");
    const uint32_t C = features.dim(0);
    const uint32_t H = features.dim(1);
    const uint32_t W = features.dim(2);
    const size_t plane = size_t(H) * W;

    RawBev out = RawBev::zeros(C, pull.h, pull.w);
    out.valid = pull.valid;
    const size_t cells = size_t(pull.h) * pull.w;

    parallel_for(cells, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            if (!pull.valid[i]) continue;
            const BilinearTap tap = BilinearTap::at(pull.u(i), pull.v(i), H, W);
            for (uint32_t c = 0; c < C; ++c)
                out.features.data()[c * cells + i] =
                    float(tap.apply(features.data() + c * plane));
            out.conf.data()[i] = 1.0f;
        }
    });
    return out;
}

CellDetail project_cell_detail(const Tensor& features, const Gauss2& cell_gauss,
                               const Tensor& alpha_prime, int k_count,
                               SampleMode mode, uint64_t seed, uint64_t cell_id) {
    CellDetail d;
    d.feature.assign(features.dim(0), 0.0);
    d.alpha = accumulate_cell(features, alpha_prime, cell_gauss, k_count, mode,
                              seed, cell_id, d.locs, d.feature.data(), &d.weights);
    return d;
}

}  // namespace bevproj
