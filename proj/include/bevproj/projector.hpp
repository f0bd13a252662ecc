#pragma once

#include <cstdint>
#include <vector>

#include "bevproj/fields.hpp"
#include "bevproj/geometry.hpp"
#include "bevproj/sampling.hpp"
#include "bevproj/tensor.hpp"

namespace bevproj {

/// Per-camera projection result on the BEV grid: features B_raw, per-cell
/// confidence alpha, and the geometric coverage mask used by the camera
/// merge (a cell can be covered yet carry alpha 0).
struct RawBev {
    Tensor features;            // C x h x w
    Tensor conf;                // h x w, in [0, 1]
    std::vector<uint8_t> valid; // h*w

    static RawBev zeros(uint32_t channels, uint32_t h, uint32_t w);
};

/// Probabilistic feature projection. Per valid cell: K locations drawn
/// from N(mu_i, Sigma_i); Gaussian likelihoods normalized over all K
/// draws (out-of-image draws stay in the denominator); per-sample weight
/// n_k * alpha'(loc_k) with alpha' forced to 0 out of image; the cell
/// feature is the weighted sum of bilinear feature reads and the cell
/// confidence the sum of weights. K-sums accumulate in double.
RawBev prob_project(const Tensor& features, const ProjectedParams& params,
                    const Tensor& alpha_prime, int k_count, SampleMode mode,
                    uint64_t seed);

/// Static pull: one bilinear read per valid cell, confidence 1.
RawBev static_project(const Tensor& features, const PullMap& pull);

/// Per-sample breakdown of one cell's projection, for tests and
/// debugging; follows exactly the same arithmetic as prob_project.
struct CellDetail {
    std::vector<Eigen::Vector2d> locs;
    std::vector<double> weights;       // w_k = n_k * alpha'_k
    std::vector<double> feature;       // C accumulated values
    double alpha = 0;
};
CellDetail project_cell_detail(const Tensor& features, const Gauss2& cell_gauss,
                               const Tensor& alpha_prime, int k_count,
                               SampleMode mode, uint64_t seed, uint64_t cell_id);

}  // namespace bevproj
