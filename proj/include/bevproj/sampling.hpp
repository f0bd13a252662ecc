#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace bevproj {

/// Floor for Cholesky diagonals (pixels). Keeps every interpolated
/// covariance strictly positive definite.
inline constexpr double kSigmaMin = 1e-3;

/// 2-D Gaussian carried as mean plus the lower-triangular Cholesky factor
/// of its covariance: Sigma = L L^T with L = [[l11, 0], [l21, l22]].
struct Gauss2 {
    Eigen::Vector2d mean{0, 0};  // (u, v) pixels
    double l11 = 1, l21 = 0, l22 = 1;
};

/// Exact bivariate normal density via forward substitution on L; never
/// forms or inverts Sigma.
double gaussian_pdf2(const Eigen::Vector2d& loc, const Gauss2& g);

enum class SampleMode { Stochastic, Deterministic };

// Counter-based RNG: every value is a pure function of (seed, stream,
// counter), so results are independent of evaluation order and thread
// schedule.
namespace rng {

uint64_t mix(uint64_t x);
uint64_t key(uint64_t seed, uint64_t stream, uint64_t counter);
/// Uniform in (0, 1), never exactly 0 or 1.
double uniform01(uint64_t seed, uint64_t stream, uint64_t counter);
/// Standard-normal pair (Box-Muller) keyed by (seed, stream, counter).
Eigen::Vector2d normal_pair(uint64_t seed, uint64_t stream, uint64_t counter);

}  // namespace rng

/// K sample locations from the per-cell Gaussian.
/// Stochastic: mean + L z_k with keyed standard-normal pairs.
/// Deterministic: the mean, then unit vectors at angles 2 pi j / (K-1)
/// mapped through L. Throws std::invalid_argument for K < 1.
void draw_samples(const Gauss2& g, int k_count, SampleMode mode, uint64_t seed,
                  uint64_t cell_id, std::vector<Eigen::Vector2d>* out);

/// One bilinear read: corner offsets into an H*W plane plus weights,
/// reusable across channels. Out-of-bounds locations (outside
/// [0, W-1] x [0, H-1]) yield in_bounds = false and zero weights; corner
/// reads with zero weight are redirected to index 0.
struct BilinearTap {
    bool in_bounds = false;
    size_t i00 = 0, i01 = 0, i10 = 0, i11 = 0;
    double w00 = 0, w01 = 0, w10 = 0, w11 = 0;

    static BilinearTap at(double u, double v, uint32_t H, uint32_t W);

    double apply(const float* plane) const {
        return w00 * plane[i00] + w01 * plane[i01] + w10 * plane[i10] +
               w11 * plane[i11];
    }
};

/// Samples a (C,H,W) field at pixel location (u, v). Writes C values to
/// `out` (zeros when out of bounds) and returns whether the location was
/// in bounds.
bool bilinear_sample(const float* field, uint32_t C, uint32_t H, uint32_t W,
                     double u, double v, double* out);

/// Single-channel convenience wrapper.
double bilinear_sample1(const float* plane, uint32_t H, uint32_t W, double u,
                        double v, bool* in_bounds = nullptr);

}  // namespace bevproj
