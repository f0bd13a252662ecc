#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <vector>

namespace bevproj {

/// Dense row-major float32 tensor. Bulk feature data (camera features,
/// parameter fields, BEV grids) lives in these; scalar geometry is done
/// in doubles and converted at the edges.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<uint32_t> dims, float fill = 0.0f);
    Tensor(std::initializer_list<uint32_t> dims, float fill = 0.0f);

    const std::vector<uint32_t>& dims() const { return dims_; }
    uint32_t dim(size_t i) const { return dims_[i]; }
    size_t rank() const { return dims_.size(); }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    // rank-2 (h, w)
    float& at(size_t i, size_t j) { return data_[i * dims_[1] + j]; }
    float at(size_t i, size_t j) const { return data_[i * dims_[1] + j]; }
    // rank-3 (c, h, w)
    float& at(size_t c, size_t i, size_t j) {
        return data_[(c * dims_[1] + i) * dims_[2] + j];
    }
    float at(size_t c, size_t i, size_t j) const {
        return data_[(c * dims_[1] + i) * dims_[2] + j];
    }

    // Pointer to channel plane c of a rank-3 tensor.
    float* plane(size_t c) { return data_.data() + c * plane_size(); }
    const float* plane(size_t c) const { return data_.data() + c * plane_size(); }
    size_t plane_size() const { return size_t(dims_[rank() - 2]) * dims_[rank() - 1]; }

    bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }
    bool all_finite() const;

private:
    std::vector<uint32_t> dims_;
    std::vector<float> data_;
};

uint64_t fnv1a64(const void* bytes, size_t n);
/// Checksum over the tensor payload as little-endian float bytes.
uint64_t tensor_checksum(const Tensor& t);
/// Same hash over a double array, converted to float32 first.
uint64_t tensor_checksum(const double* vals, size_t n);

// BVT1 container: magic "BVT1", u32 dtype code (1 = float32 little-endian),
// u32 rank, rank x u32 dims, row-major payload. Readers reject bad magic,
// unknown dtypes, and trailing bytes.
void write_bvt(const std::filesystem::path& path, const Tensor& t);
Tensor read_bvt(const std::filesystem::path& path);

/// 8-bit binary PGM (P5) preview. Values are clamped to [lo, hi] and
/// scaled to 0..255.
void write_pgm(const std::filesystem::path& path, const float* data,
               uint32_t h, uint32_t w, float lo = 0.0f, float hi = 1.0f);

}  // namespace bevproj
