#include "bevproj/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "bevproj/errors.hpp"

namespace bevproj {

namespace {

size_t element_count(const std::vector<uint32_t>& dims) {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<uint32_t> dims, float fill)
    : dims_(std::move(dims)), data_(element_count(dims_), fill) {}

Tensor::Tensor(std::initializer_list<uint32_t> dims, float fill)
    : Tensor(std::vector<uint32_t>(dims), fill) {}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](float v) { return std::isfinite(v); });
}

uint64_t fnv1a64(const void* bytes, size_t n) {
    const auto* p = static_cast<const uint8_t*>(bytes);
    uint64_t h = 14695981039346656037ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t tensor_checksum(const Tensor& t) {
    static_assert(std::endian::native == std::endian::little,
                  "checksums are defined over little-endian float bytes");
    return fnv1a64(t.data(), t.size() * sizeof(float));
}

uint64_t tensor_checksum(const double* vals, size_t n) {
    std::vector<float> f(n);
    for (size_t i = 0; i < n; ++i) f[i] = static_cast<float>(vals[i]);
    return fnv1a64(f.data(), n * sizeof(float));
}

namespace {

constexpr char kMagic[4] = {'B', 'V', 'T', '1'};
constexpr uint32_t kDtypeF32 = 1;

void put_u32(std::ostream& os, uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                 char((v >> 24) & 0xff)};
    os.write(b, 4);
}

uint32_t get_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw FormatError("truncated tensor file while reading " + what);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
           uint32_t(b[3]) << 24;
}

}  // namespace

void write_bvt(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path.string());
    os.write(kMagic, 4);
    put_u32(os, kDtypeF32);
    put_u32(os, static_cast<uint32_t>(t.rank()));
    for (uint32_t d : t.dims()) put_u32(os, d);
    static_assert(std::endian::native == std::endian::little);
    os.write(reinterpret_cast<const char*>(t.data()),
             std::streamsize(t.size() * sizeof(float)));
    if (!os) throw FormatError("short write: " + path.string());
}

Tensor read_bvt(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open tensor file: " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad magic in " + path.string());
    const uint32_t dtype = get_u32(is, "dtype");
    if (dtype != kDtypeF32)
        throw FormatError("unsupported dtype code " + std::to_string(dtype) +
                          " in " + path.string());
    const uint32_t rank = get_u32(is, "rank");
    if (rank == 0 || rank > 8)
        throw FormatError("unreasonable rank " + std::to_string(rank) + " in " +
                          path.string());
    std::vector<uint32_t> dims(rank);
    size_t count = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        dims[i] = get_u32(is, "dim");
        if (dims[i] == 0 || count > (size_t(1) << 32) / std::max(1u, dims[i]))
            throw FormatError("dimension overflow in " + path.string());
        count *= dims[i];
    }
    Tensor t(dims);
    if (!is.read(reinterpret_cast<char*>(t.data()),
                 std::streamsize(count * sizeof(float))))
        throw FormatError("truncated payload in " + path.string());
    is.peek();
    if (!is.eof())
        throw FormatError("trailing bytes after payload in " + path.string());
    return t;
}

void write_pgm(const std::filesystem::path& path, const float* data,
               uint32_t h, uint32_t w, float lo, float hi) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path.string());
    os << "P5\n" << w << " " << h << "\n255\n";
    const float span = std::max(hi - lo, std::numeric_limits<float>::min());
    std::vector<uint8_t> row(w);
    for (uint32_t i = 0; i < h; ++i) {
        for (uint32_t j = 0; j < w; ++j) {
            float v = (data[size_t(i) * w + j] - lo) / span;
            v = std::clamp(v, 0.0f, 1.0f);
            row[j] = static_cast<uint8_t>(std::lround(v * 255.0f));
        }
        os.write(reinterpret_cast<const char*>(row.data()), w);
    }
}

}  // namespace bevproj
