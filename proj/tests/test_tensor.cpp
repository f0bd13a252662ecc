#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "bevproj/errors.hpp"
#include "bevproj/tensor.hpp"

using namespace bevproj;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("bevproj_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("tensor shape and indexing") {
    Tensor t({2, 3, 4}, 1.5f);
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    t.at(1, 2, 3) = 7.0f;
    CHECK(t.data()[23] == 7.0f);
    CHECK(t.plane(1) == t.data() + 12);
}

TEST_CASE("bvt round trip preserves bytes") {
    TempDir tmp;
    std::mt19937_64 gen(7);
    Tensor t({3, 5, 7});
    std::uniform_real_distribution<float> u(-10, 10);
    for (size_t i = 0; i < t.size(); ++i) t.data()[i] = u(gen);

    const fs::path p = tmp.path / "t.bvt";
    write_bvt(p, t);
    const Tensor r = read_bvt(p);
    REQUIRE(r.dims() == t.dims());
    CHECK(std::memcmp(r.data(), t.data(), t.size() * sizeof(float)) == 0);
}

TEST_CASE("bvt rejects malformed files") {
    TempDir tmp;
    Tensor t({2, 2});
    const fs::path p = tmp.path / "t.bvt";
    write_bvt(p, t);

    SUBCASE("trailing bytes") {
        std::ofstream os(p, std::ios::binary | std::ios::app);
        os.put('x');
        os.close();
        CHECK_THROWS_AS(read_bvt(p), FormatError);
    }
    SUBCASE("bad magic") {
        std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
        f.put('Z');
        f.close();
        CHECK_THROWS_AS(read_bvt(p), FormatError);
    }
    SUBCASE("unknown dtype") {
        std::fstream f(p, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        f.put(char(9));
        f.close();
        CHECK_THROWS_AS(read_bvt(p), FormatError);
    }
    SUBCASE("truncated payload") {
        fs::resize_file(p, fs::file_size(p) - 2);
        CHECK_THROWS_AS(read_bvt(p), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_bvt(tmp.path / "nope.bvt"), FormatError);
    }
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("checksum tracks payload content") {
    Tensor a({4, 4}, 1.0f);
    Tensor b({4, 4}, 1.0f);
    CHECK(tensor_checksum(a) == tensor_checksum(b));
    b.at(2, 2) = 2.0f;
    CHECK(tensor_checksum(a) != tensor_checksum(b));
}

TEST_CASE("pgm writes a parseable header and clamps") {
    TempDir tmp;
    float data[6] = {-1.0f, 0.0f, 0.25f, 0.5f, 1.0f, 2.0f};
    const fs::path p = tmp.path / "img.pgm";
    write_pgm(p, data, 2, 3);
    std::ifstream is(p, std::ios::binary);
    std::string magic;
    int w, h, maxval;
    is >> magic >> w >> h >> maxval;
    CHECK(magic == "P5");
    CHECK(w == 3);
    CHECK(h == 2);
    CHECK(maxval == 255);
    is.get();
    unsigned char px[6];
    is.read(reinterpret_cast<char*>(px), 6);
    CHECK(px[0] == 0);    // clamped low
    CHECK(px[5] == 255);  // clamped high
    CHECK(px[3] == 128);  // 0.5 rounds up
}
