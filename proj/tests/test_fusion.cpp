#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bevproj/errors.hpp"
#include "bevproj/fusion.hpp"
#include "test_util.hpp"

using namespace bevproj;

namespace {

RawBev uniform_bev(uint32_t C, uint32_t h, uint32_t w, float feature, float conf,
                   bool valid = true) {
    RawBev r = RawBev::zeros(C, h, w);
    if (conf > 0 || valid) {
        std::fill_n(r.features.data(), r.features.size(), conf > 0 ? feature : 0.0f);
        std::fill_n(r.conf.data(), r.conf.size(), conf);
        std::fill(r.valid.begin(), r.valid.end(), valid ? 1 : 0);
    }
    return r;
}

// independent Eq.-8 scalar oracle
void eq8(double a, double ah, double b, double bh, double& feat, double& conf) {
    const double sum = a + ah;
    if (sum < kConfEps) {
        feat = 0;
        conf = 0;
        return;
    }
    feat = (a * b + ah * bh) / sum;
    conf = (a * a + ah * ah) / sum;
}

}  // namespace

TEST_CASE("camera merge worked examples") {
    SUBCASE("single contributing camera passes through") {
        const RawBev cam = uniform_bev(1, 4, 4, 2.5f, 0.7f);
        const RawBev out = merge_cameras({cam});
        CHECK(testutil::max_abs_diff(out.features, cam.features) == 0.0);
        CHECK(testutil::max_abs_diff(out.conf, cam.conf) == 0.0);
    }
    SUBCASE("two cameras average features and confidences") {
        const RawBev a = uniform_bev(1, 4, 4, 2.0f, 0.6f);
        const RawBev b = uniform_bev(1, 4, 4, 4.0f, 1.0f);
        const RawBev out = merge_cameras({a, b});
        CHECK(out.features.data()[0] == doctest::Approx(3.0));
        CHECK(out.conf.data()[0] == doctest::Approx(0.8));
    }
    SUBCASE("uncovered cells stay zero under the max(1, V) guard") {
        RawBev a = uniform_bev(1, 2, 2, 5.0f, 1.0f);
        a.valid[3] = 0;
        a.conf.data()[3] = 0;
        a.features.data()[3] = 0;
        const RawBev out = merge_cameras({a});
        CHECK(out.features.data()[3] == 0.0f);
        CHECK(out.conf.data()[3] == 0.0f);
        CHECK(out.valid[3] == 0);
    }
    SUBCASE("a contributing camera with zero confidence still dilutes") {
        // coverage counts geometry, not alpha
        const RawBev a = uniform_bev(1, 2, 2, 4.0f, 1.0f);
        const RawBev b = uniform_bev(1, 2, 2, 0.0f, 0.0f, true);
        const RawBev out = merge_cameras({a, b});
        CHECK(out.features.data()[0] == doctest::Approx(2.0));
        CHECK(out.conf.data()[0] == doctest::Approx(0.5));
    }
    SUBCASE("empty camera list is an argument error") {
        CHECK_THROWS_AS(merge_cameras({}), std::invalid_argument);
    }
}

TEST_CASE("camera merge equals a brute-force loop and ignores order") {
    std::mt19937_64 gen(41);
    const uint32_t C = 3, h = 20, w = 12;
    std::vector<RawBev> cams;
    std::uniform_real_distribution<float> uf(-2, 2), uc(0, 1);
    std::bernoulli_distribution cover(0.6);
    for (int k = 0; k < 6; ++k) {
        RawBev r = RawBev::zeros(C, h, w);
        for (size_t i = 0; i < size_t(h) * w; ++i) {
            if (!cover(gen)) continue;
            r.valid[i] = 1;
            r.conf.data()[i] = uc(gen);
            for (uint32_t c = 0; c < C; ++c)
                r.features.data()[c * h * w + i] = uf(gen);
        }
        cams.push_back(std::move(r));
    }

    const RawBev merged = merge_cameras(cams);

    // brute force oracle, written independently
    for (size_t i = 0; i < size_t(h) * w; ++i) {
        int v = 0;
        double conf = 0;
        for (const auto& cam : cams)
            if (cam.valid[i]) {
                ++v;
                conf += cam.conf.data()[i];
            }
        const double div = std::max(1, v);
        CHECK(std::abs(merged.conf.data()[i] - conf / div) < 1e-6);
        for (uint32_t c = 0; c < C; ++c) {
            double f = 0;
            for (const auto& cam : cams)
                if (cam.valid[i]) f += cam.features.data()[c * h * w + i];
            CHECK(std::abs(merged.features.data()[c * h * w + i] - f / div) < 1e-6);
        }
    }

    std::vector<RawBev> shuffled = cams;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const RawBev merged2 = merge_cameras(shuffled);
    CHECK(testutil::max_abs_diff(merged.features, merged2.features) < 1e-6);
    CHECK(testutil::max_abs_diff(merged.conf, merged2.conf) < 1e-6);
}

TEST_CASE("history merge worked examples") {
    SUBCASE("equal confidences average the features") {
        const RawBev cur = uniform_bev(1, 2, 2, 2.0f, 0.5f);
        const RawBev hist = uniform_bev(1, 2, 2, 4.0f, 0.5f);
        const RawBev out = merge_history(cur, hist);
        CHECK(out.features.data()[0] == doctest::Approx(3.0));
        CHECK(out.conf.data()[0] == doctest::Approx(0.5));
    }
    SUBCASE("zero history confidence leaves the current grid unchanged") {
        const RawBev cur = uniform_bev(2, 3, 3, 1.5f, 0.8f);
        const RawBev hist = uniform_bev(2, 3, 3, 0.0f, 0.0f);
        const RawBev out = merge_history(cur, hist);
        for (size_t i = 0; i < cur.features.size(); ++i)
            CHECK(out.features.data()[i] ==
                  doctest::Approx(cur.features.data()[i]).epsilon(1e-7));
        for (size_t i = 0; i < cur.conf.size(); ++i)
            CHECK(out.conf.data()[i] ==
                  doctest::Approx(cur.conf.data()[i]).epsilon(1e-7));
    }
    SUBCASE("0.8 / 0.2 mix") {
        const RawBev cur = uniform_bev(1, 2, 2, 1.0f, 0.8f);
        const RawBev hist = uniform_bev(1, 2, 2, 0.0f, 0.2f);
        const RawBev out = merge_history(cur, hist);
        CHECK(out.features.data()[0] == doctest::Approx(0.8));
        CHECK(out.conf.data()[0] == doctest::Approx(0.68));
    }
    SUBCASE("both confidences below the guard zero the cell") {
        const RawBev cur = uniform_bev(1, 2, 2, 9.0f, 1e-8f);
        const RawBev hist = uniform_bev(1, 2, 2, 9.0f, 1e-8f);
        const RawBev out = merge_history(cur, hist);
        CHECK(out.features.data()[0] == 0.0f);
        CHECK(out.conf.data()[0] == 0.0f);
    }
}

TEST_CASE("history merge randomized properties") {
    std::mt19937_64 gen(43);
    std::uniform_real_distribution<float> uc(0, 1), uf(-3, 3);
    for (int trial = 0; trial < 20000; ++trial) {
        const float a = uc(gen), ah = uc(gen), b = uf(gen), bh = uf(gen);
        const RawBev cur = uniform_bev(1, 1, 1, b, a);
        const RawBev hist = uniform_bev(1, 1, 1, bh, ah);
        const RawBev out = merge_history(cur, hist);
        const RawBev swapped = merge_history(hist, cur);

        // symmetry
        CHECK(out.features.data()[0] == doctest::Approx(swapped.features.data()[0])
                                            .epsilon(1e-6));
        CHECK(out.conf.data()[0] ==
              doctest::Approx(swapped.conf.data()[0]).epsilon(1e-6));

        double feat, conf;
        eq8(a, ah, a > 0 ? b : 0.0f, ah > 0 ? bh : 0.0f, feat, conf);
        CHECK(out.features.data()[0] == doctest::Approx(feat).epsilon(1e-5));
        CHECK(out.conf.data()[0] == doctest::Approx(conf).epsilon(1e-5));

        if (a + ah >= kConfEps) {
            // convex combination of the two features
            const float blo = std::min(cur.features.data()[0], hist.features.data()[0]);
            const float bhi = std::max(cur.features.data()[0], hist.features.data()[0]);
            CHECK(out.features.data()[0] >= blo - 1e-5);
            CHECK(out.features.data()[0] <= bhi + 1e-5);
            // confidence bounds
            CHECK(out.conf.data()[0] >= (a + ah) / 2 - 1e-6);
            CHECK(out.conf.data()[0] <= std::max(a, ah) + 1e-6);
        }
    }
}

TEST_CASE("temporal pollution: zero-confidence history never leaks") {
    RawBev cur = uniform_bev(1, 4, 4, 1.0f, 0.9f);
    RawBev hist = RawBev::zeros(1, 4, 4);
    // breaking the invariant on purpose: huge feature with zero confidence
    std::fill_n(hist.features.data(), hist.features.size(), 1e6f);
    const RawBev out = merge_history(cur, hist);
    for (size_t i = 0; i < out.features.size(); ++i)
        CHECK(out.features.data()[i] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("raw history save applies the decay") {
    HistoryState state;
    const RawBev merged = uniform_bev(1, 4, 4, 2.0f, 0.5f);
    SUBCASE("gamma 1 stores the confidence unchanged") {
        update_raw_history(state, merged, {1, 2, 0.1}, 1.0);
        REQUIRE(state.raw_hist.has_value());
        CHECK(state.raw_hist->conf.data()[0] == 0.5f);
        CHECK(state.pose_hist.x == 1.0);
    }
    SUBCASE("gamma 0.9 decays it") {
        update_raw_history(state, merged, {}, 0.9);
        CHECK(state.raw_hist->conf.data()[0] == doctest::Approx(0.45));
    }
}

TEST_CASE("repeated merge with equal confidence is a fixed point") {
    // iterate Eq. 8 with the stored result under gamma = 1 and a constant
    // input; features stay put and confidence converges to alpha0
    const double alpha0 = 0.6, feature = 1.25;
    double a = alpha0, b = feature;
    for (int step = 0; step < 10; ++step) {
        double feat, conf;
        eq8(alpha0, a, feature, b, feat, conf);
        b = feat;
        a = conf;
        CHECK(b == doctest::Approx(feature).epsilon(1e-9));
    }
    CHECK(a == doctest::Approx(alpha0).epsilon(1e-6));

    // the same through the library path
    HistoryState state;
    const RawBev frame = uniform_bev(1, 2, 2, float(feature), float(alpha0));
    update_raw_history(state, frame, {}, 1.0);
    RawBev merged = frame;
    for (int step = 0; step < 5; ++step) {
        merged = merge_history(frame, *state.raw_hist);
        update_raw_history(state, merged, {}, 1.0);
    }
    CHECK(merged.features.data()[0] == doctest::Approx(feature).epsilon(1e-5));
    CHECK(merged.conf.data()[0] == doctest::Approx(alpha0).epsilon(1e-4));
}

TEST_CASE("memory selection follows nearest-displacement without replacement") {
    const BevGridSpec grid = BevGridSpec::from_ranges(-30, 30, -15, 15, 0.5);
    FusionConfig cfg;
    cfg.memory_distances = {1, 4, 8, 12};
    cfg.T = 4;

    auto entry_with_tag = [&](double x, float tag) {
        HistoryState::RingEntry e;
        e.features = Tensor({1, grid.h, grid.w}, tag);
        e.pose = {x, 0, 0};
        return e;
    };

    SUBCASE("hand-worked displacement example") {
        HistoryState state;
        // oldest first: displacements 16, 8, 4, 2, 1, 0.5
        const double xs[6] = {-16, -8, -4, -2, -1, -0.5};
        for (int i = 0; i < 6; ++i)
            state.ring.push_back(entry_with_tag(xs[i], float(i + 1)));
        const auto mem = select_memory(state, EgoPose{}, grid, cfg);
        REQUIRE(mem.size() == 4);
        // expected picks: 1.0 (tag 5), 4.0 (tag 3), 8.0 (tag 2), 16.0 (tag 1)
        const size_t center = (grid.h / 2) * grid.w + grid.w / 2;
        CHECK(mem[0].data()[center] == 5.0f);
        CHECK(mem[1].data()[center] == 3.0f);
        CHECK(mem[2].data()[center] == 2.0f);
        CHECK(mem[3].data()[center] == 1.0f);
    }
    SUBCASE("single entry duplicates") {
        HistoryState state;
        state.ring.push_back(entry_with_tag(-2, 9.0f));
        const auto mem = select_memory(state, EgoPose{}, grid, cfg);
        REQUIRE(mem.size() == 4);
        const size_t center = (grid.h / 2) * grid.w + grid.w / 2;
        for (const Tensor& m : mem) CHECK(m.data()[center] == 9.0f);
    }
    SUBCASE("stationary vehicle takes the most recent entries") {
        HistoryState state;
        for (int i = 0; i < 8; ++i) state.ring.push_back(entry_with_tag(0, float(i)));
        const auto mem = select_memory(state, EgoPose{}, grid, cfg);
        const size_t center = (grid.h / 2) * grid.w + grid.w / 2;
        CHECK(mem[0].data()[center] == 7.0f);
        CHECK(mem[1].data()[center] == 6.0f);
        CHECK(mem[2].data()[center] == 5.0f);
        CHECK(mem[3].data()[center] == 4.0f);
    }
    SUBCASE("empty ring throws; the pipeline substitutes zeros") {
        HistoryState state;
        CHECK_THROWS_AS(select_memory(state, EgoPose{}, grid, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("temporal fusion") {
    const uint32_t C = 3, h = 5, w = 4;
    std::mt19937_64 gen(47);
    RawBev cur = RawBev::zeros(C, h, w);
    cur.features = testutil::random_tensor({C, h, w}, gen);
    std::vector<Tensor> memory;
    for (int t = 0; t < 4; ++t)
        memory.push_back(Tensor({C, h, w}, float(t + 1)));

    SUBCASE("no weights passes the current features through") {
        const Tensor out = temporal_fuse(cur, memory, nullptr);
        CHECK(testutil::max_abs_diff(out, cur.features) == 0.0);
    }
    SUBCASE("identity embedding reproduces the current features") {
        Tensor weights({5 * C, C}, 0.0f);
        for (uint32_t c = 0; c < C; ++c) weights.at(c, c) = 1.0f;
        const Tensor out = temporal_fuse(cur, memory, &weights);
        CHECK(testutil::max_abs_diff(out, cur.features) < 1e-6);
    }
    SUBCASE("uniform average blocks mix the slots") {
        Tensor weights({5 * C, C}, 0.0f);
        for (uint32_t s = 0; s < 5; ++s)
            for (uint32_t c = 0; c < C; ++c) weights.at(s * C + c, c) = 0.2f;
        const Tensor out = temporal_fuse(cur, memory, &weights);
        for (uint32_t c = 0; c < C; ++c)
            for (uint32_t i = 0; i < h; ++i)
                for (uint32_t j = 0; j < w; ++j) {
                    const double expect =
                        0.2 * (cur.features.at(c, i, j) + 1 + 2 + 3 + 4);
                    CHECK(out.at(c, i, j) == doctest::Approx(expect).epsilon(1e-5));
                }
    }
    SUBCASE("wrong weight shape is a format error") {
        Tensor weights({5 * C + 1, C}, 0.0f);
        CHECK_THROWS_AS(temporal_fuse(cur, memory, &weights), FormatError);
    }
}

TEST_CASE("fusion config validation") {
    FusionConfig cfg;
    cfg.validate();
    SUBCASE("K") {
        cfg.K = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("gamma") {
        cfg.gamma = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("distances must match T and increase") {
        cfg.memory_distances = {1, 1, 2, 3};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.memory_distances = {1, 2, 3};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("ablation rows set the switch triple") {
    FusionConfig cfg;
    apply_ablation_row(cfg, "A");
    CHECK((!cfg.use_gaussian && !cfg.use_alpha && !cfg.use_raw_hist));
    apply_ablation_row(cfg, "C2");
    CHECK((!cfg.use_gaussian && cfg.use_alpha && cfg.use_raw_hist));
    apply_ablation_row(cfg, "E");
    CHECK((cfg.use_gaussian && cfg.use_alpha && cfg.use_raw_hist));
    CHECK_THROWS_AS(apply_ablation_row(cfg, "F"), ConfigError);
}
