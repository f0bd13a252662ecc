#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "bevproj/sampling.hpp"

using namespace bevproj;

TEST_CASE("bilinear examples on a 2x2 field") {
    // rows are v: field[v=0] = {0, 1}, field[v=1] = {2, 3}
    const float field[4] = {0, 1, 2, 3};
    SUBCASE("center is the mean of the corners") {
        bool in = false;
        CHECK(bilinear_sample1(field, 2, 2, 0.5, 0.5, &in) == doctest::Approx(1.5));
        CHECK(in);
    }
    SUBCASE("integer pixel is an identity read") {
        bool in = false;
        CHECK(bilinear_sample1(field, 2, 2, 0.0, 0.0, &in) == 0.0);
        CHECK(in);
        CHECK(bilinear_sample1(field, 2, 2, 1.0, 1.0, &in) == 3.0);
        CHECK(in);
    }
    SUBCASE("out of bounds reads zero") {
        bool in = true;
        CHECK(bilinear_sample1(field, 2, 2, -0.1, 0.0, &in) == 0.0);
        CHECK_FALSE(in);
        CHECK(bilinear_sample1(field, 2, 2, 0.0, 1.0001, &in) == 0.0);
        CHECK_FALSE(in);
    }
    SUBCASE("boundary locations are in bounds") {
        bool in = false;
        CHECK(bilinear_sample1(field, 2, 2, 1.0, 0.0, &in) == 1.0);
        CHECK(in);
    }
}

TEST_CASE("bilinear is exact for affine fields") {
    // coefficients chosen exactly representable in float32
    const double a = 0.25, b = 0.5, c = -1.25;
    const uint32_t H = 9, W = 13;
    std::vector<float> field(size_t(H) * W);
    for (uint32_t v = 0; v < H; ++v)
        for (uint32_t u = 0; u < W; ++u)
            field[size_t(v) * W + u] = float(a + b * u + c * v);

    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> uu(0, W - 1), uv(0, H - 1);
    for (int i = 0; i < 500; ++i) {
        const double u = uu(gen), v = uv(gen);
        const double got = bilinear_sample1(field.data(), H, W, u, v);
        CHECK(std::abs(got - (a + b * u + c * v)) < 1e-12);
    }
}

TEST_CASE("multi-channel sampling zeroes all channels out of bounds") {
    const uint32_t C = 3, H = 4, W = 4;
    std::vector<float> field(C * H * W, 2.5f);
    double out[3] = {9, 9, 9};
    CHECK_FALSE(bilinear_sample(field.data(), C, H, W, -1.0, 0.0, out));
    CHECK(out[0] == 0.0);
    CHECK(out[2] == 0.0);
    CHECK(bilinear_sample(field.data(), C, H, W, 1.5, 1.5, out));
    CHECK(out[1] == doctest::Approx(2.5));
}

TEST_CASE("gaussian pdf analytic values") {
    Gauss2 g;
    g.mean = {3, -2};
    SUBCASE("at the mean of a unit gaussian: 1 / (2 pi)") {
        CHECK(std::abs(gaussian_pdf2(g.mean, g) - 1.0 / (2 * std::numbers::pi)) <
              1e-9);
    }
    SUBCASE("one sigma out: exp(-1/2) / (2 pi)") {
        const double expect = std::exp(-0.5) / (2 * std::numbers::pi);
        CHECK(std::abs(gaussian_pdf2({4, -2}, g) - expect) < 1e-9);
        CHECK(std::abs(gaussian_pdf2({3, -1}, g) - expect) < 1e-9);
    }
    SUBCASE("Sigma = 4I at the mean: 1 / (8 pi)") {
        g.l11 = 2;
        g.l22 = 2;
        CHECK(std::abs(gaussian_pdf2(g.mean, g) - 1.0 / (8 * std::numbers::pi)) <
              1e-9);
    }
    SUBCASE("correlated factor agrees with the closed-form density") {
        g.l11 = 1.5;
        g.l21 = 0.8;
        g.l22 = 0.6;
        const Eigen::Matrix2d l{{g.l11, 0}, {g.l21, g.l22}};
        const Eigen::Matrix2d sigma = l * l.transpose();
        const Eigen::Vector2d d(0.7, -0.9);
        const double expect =
            std::exp(-0.5 * d.dot(sigma.inverse() * d)) /
            (2 * std::numbers::pi * std::sqrt(sigma.determinant()));
        CHECK(std::abs(gaussian_pdf2(g.mean + d, g) - expect) < 1e-12);
    }
}

TEST_CASE("pdf mass integrates to 1 within 1%") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 5; ++trial) {
        Gauss2 g;
        g.mean = {u(gen) * 10, u(gen) * 10};
        g.l11 = 0.5 + 2 * u(gen);
        g.l21 = 2 * u(gen) - 1;
        g.l22 = 0.5 + 2 * u(gen);
        const double su = g.l11;                                   // std of u
        const double sv = std::hypot(g.l21, g.l22);                // std of v
        const double step = std::min(su, sv) / 20.0;
        double mass = 0;
        for (double x = g.mean.x() - 6 * su; x <= g.mean.x() + 6 * su; x += step)
            for (double y = g.mean.y() - 6 * sv; y <= g.mean.y() + 6 * sv; y += step)
                mass += gaussian_pdf2({x, y}, g) * step * step;
        CHECK(std::abs(mass - 1.0) < 0.01);
    }
}

TEST_CASE("deterministic sampling patterns") {
    Gauss2 g;
    g.mean = {10, 20};
    std::vector<Eigen::Vector2d> out;
    SUBCASE("K = 1 is exactly the mean") {
        draw_samples(g, 1, SampleMode::Deterministic, 0, 0, &out);
        REQUIRE(out.size() == 1);
        CHECK((out[0] - g.mean).norm() == 0.0);
    }
    SUBCASE("K = 5 with identity covariance places unit offsets on the axes") {
        draw_samples(g, 5, SampleMode::Deterministic, 0, 0, &out);
        REQUIRE(out.size() == 5);
        CHECK((out[0] - g.mean).norm() == 0.0);
        CHECK((out[1] - (g.mean + Eigen::Vector2d(1, 0))).norm() < 1e-12);
        CHECK((out[2] - (g.mean + Eigen::Vector2d(0, 1))).norm() < 1e-12);
        CHECK((out[3] - (g.mean + Eigen::Vector2d(-1, 0))).norm() < 1e-12);
        CHECK((out[4] - (g.mean + Eigen::Vector2d(0, -1))).norm() < 1e-12);
    }
    SUBCASE("K = 0 is rejected") {
        CHECK_THROWS_AS(draw_samples(g, 0, SampleMode::Deterministic, 0, 0, &out),
                        std::invalid_argument);
    }
}

TEST_CASE("stochastic sampling moments") {
    Gauss2 g;
    g.mean = {5, -3};
    g.l11 = 1.3;
    g.l21 = -0.4;
    g.l22 = 0.9;
    const int n = 100000;
    std::vector<Eigen::Vector2d> out;
    draw_samples(g, n, SampleMode::Stochastic, 42, 7, &out);

    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& s : out) mean += s;
    mean /= n;
    CHECK(std::abs(mean.x() - g.mean.x()) < 0.02);
    CHECK(std::abs(mean.y() - g.mean.y()) < 0.02);

    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& s : out) {
        const Eigen::Vector2d d = s - mean;
        cov += d * d.transpose();
    }
    cov /= n - 1;
    const Eigen::Matrix2d l{{g.l11, 0}, {g.l21, g.l22}};
    const Eigen::Matrix2d expect = l * l.transpose();
    CHECK((cov - expect).norm() / expect.norm() < 0.03);
}

TEST_CASE("keyed sampling is bit-reproducible and order-independent") {
    Gauss2 g;
    g.mean = {1, 2};
    std::vector<Eigen::Vector2d> a, b;
    draw_samples(g, 16, SampleMode::Stochastic, 99, 1234, &a);
    draw_samples(g, 16, SampleMode::Stochastic, 99, 1234, &b);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(a[0])) == 0);

    // drawing other cells in between must not perturb the stream
    std::vector<Eigen::Vector2d> noise, c;
    draw_samples(g, 8, SampleMode::Stochastic, 99, 77, &noise);
    draw_samples(g, 16, SampleMode::Stochastic, 99, 1234, &c);
    CHECK(std::memcmp(a.data(), c.data(), a.size() * sizeof(a[0])) == 0);

    // and a different key gives a different stream
    std::vector<Eigen::Vector2d> d;
    draw_samples(g, 16, SampleMode::Stochastic, 99, 1235, &d);
    CHECK(std::memcmp(a.data(), d.data(), a.size() * sizeof(a[0])) != 0);
}

TEST_CASE("uniform01 stays inside the open interval") {
    for (uint64_t i = 0; i < 1000; ++i) {
        const double v = rng::uniform01(3, 5, i);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}
