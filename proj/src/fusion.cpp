#include "bevproj/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bevproj/errors.hpp"

namespace bevproj {

void FusionConfig::validate() const {
    if (K < 1) throw ConfigError("fusion config: K must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("fusion config: gamma must be in (0, 1]");
    if (T < 1) throw ConfigError("fusion config: T must be >= 1");
    if (memory_distances.size() != size_t(T))
        throw ConfigError("fusion config: need exactly T memory distances");
    for (size_t i = 0; i + 1 < memory_distances.size(); ++i)
        if (!(memory_distances[i] < memory_distances[i + 1]))
            throw ConfigError("fusion config: memory distances must be strictly increasing");
}

void apply_ablation_row(FusionConfig& cfg, const std::string& row) {
    struct Row {
        const char* id;
        bool gaussian, alpha, raw_hist;
    };
    static constexpr Row rows[] = {
        {"A", false, false, false},  {"B1", true, false, false},
        {"B2", true, true, false},   {"C1", false, false, true},
        {"C2", false, true, true},   {"D", true, false, true},
        {"E", true, true, true},
    };
    for (const Row& r : rows) {
        if (row == r.id) {
            cfg.use_gaussian = r.gaussian;
            cfg.use_alpha = r.alpha;
            cfg.use_raw_hist = r.raw_hist;
            return;
        }
    }
    throw ConfigError("unknown ablation row '" + row + "' (expect A, B1, B2, C1, C2, D, E)");
}

RawBev merge_cameras(const std::vector<RawBev>& per_camera) {
    if (per_camera.empty())
        throw std::invalid_argument("merge_cameras: empty camera list");
    const Tensor& f0 = per_camera.front().features;
    const uint32_t C = f0.dim(0), h = f0.dim(1), w = f0.dim(2);
    for (const RawBev& r : per_camera)
        if (!r.features.same_shape(f0))
            throw std::invalid_argument("merge_cameras: mismatched grid shapes");

    RawBev out = RawBev::zeros(C, h, w);
    const size_t cells = size_t(h) * w;
    std::vector<uint32_t> coverage(cells, 0);

    // fixed accumulation order: camera list order, double accumulators
    std::vector<double> feat_sum(cells * C, 0.0);
    std::vector<double> conf_sum(cells, 0.0);
    for (const RawBev& cam : per_camera) {
        for (size_t i = 0; i < cells; ++i) {
            if (!cam.valid[i]) continue;
            coverage[i] += 1;
            conf_sum[i] += cam.conf.data()[i];
            for (uint32_t c = 0; c < C; ++c)
                feat_sum[c * cells + i] += cam.features.data()[c * cells + i];
        }
    }
    for (size_t i = 0; i < cells; ++i) {
        const double div = std::max<uint32_t>(1, coverage[i]);
        out.conf.data()[i] = float(conf_sum[i] / div);
        out.valid[i] = coverage[i] > 0 ? 1 : 0;
        for (uint32_t c = 0; c < C; ++c)
            out.features.data()[c * cells + i] = float(feat_sum[c * cells + i] / div);
    }
    return out;
}

RawBev merge_history(const RawBev& cur, const RawBev& hist_warped) {
    if (!cur.features.same_shape(hist_warped.features))
        throw std::invalid_argument("merge_history: mismatched grid shapes");
    const uint32_t C = cur.features.dim(0);
    const size_t cells = cur.features.plane_size();

    RawBev out = RawBev::zeros(C, cur.features.dim(1), cur.features.dim(2));
    for (size_t i = 0; i < cells; ++i) {
        const double a = cur.conf.data()[i];
        const double ah = hist_warped.conf.data()[i];
        const double sum = a + ah;
        out.valid[i] = cur.valid[i] || ah > 0 ? 1 : 0;
        if (sum < kConfEps) continue;  // no information from either side
        out.conf.data()[i] = float((a * a + ah * ah) / sum);
        for (uint32_t c = 0; c < C; ++c) {
            const double b = cur.features.data()[c * cells + i];
            const double bh = hist_warped.features.data()[c * cells + i];
            out.features.data()[c * cells + i] = float((a * b + ah * bh) / sum);
        }
    }
    return out;
}

void update_raw_history(HistoryState& state, const RawBev& merged,
                        const EgoPose& pose, double gamma) {
    RawBev stored = merged;
    float* conf = stored.conf.data();
    for (size_t i = 0; i < stored.conf.size(); ++i)
        conf[i] = float(gamma * conf[i]);
    // replace-on-commit: assemble fully, then swap in
    state.raw_hist = std::move(stored);
    state.pose_hist = pose;
}

std::vector<Tensor> select_memory(const HistoryState& state, const EgoPose& pose,
                                  const BevGridSpec& grid, const FusionConfig& cfg) {
    if (state.ring.empty())
        throw std::invalid_argument("select_memory: empty ring (cold start is the caller's case)");

    const size_t n = state.ring.size();
    std::vector<double> displacement(n);
    for (size_t i = 0; i < n; ++i) {
        const double dx = state.ring[i].pose.x - pose.x;
        const double dy = state.ring[i].pose.y - pose.y;
        displacement[i] = std::hypot(dx, dy);
    }

    std::vector<uint8_t> taken(n, 0);
    std::vector<Tensor> out;
    out.reserve(cfg.T);
    size_t taken_count = 0;
    for (int t = 0; t < cfg.T; ++t) {
        if (taken_count == n) {
            std::fill(taken.begin(), taken.end(), 0);  // ring shorter than T: reuse
            taken_count = 0;
        }
        const double target = cfg.memory_distances[t];
        size_t best = n;  // higher index = more recent; ties resolved by >=
        double best_err = 0;
        for (size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double err = std::abs(displacement[i] - target);
            if (best == n || err <= best_err) {
                best = i;
                best_err = err;
            }
        }
        taken[best] = 1;
        ++taken_count;
        const EgoPose delta = compose(inverse(pose), state.ring[best].pose);
        out.push_back(warp_bev(grid, delta, state.ring[best].features));
    }
    return out;
}

Tensor temporal_fuse(const RawBev& cur, const std::vector<Tensor>& memory,
                     const Tensor* weights) {
    if (!weights) return cur.features;  // pass-through default

    const uint32_t C = cur.features.dim(0);
    const size_t cells = cur.features.plane_size();
    const uint32_t slots = uint32_t(memory.size()) + 1;
    if (weights->rank() != 2 || weights->dim(0) != slots * C || weights->dim(1) != C)
        throw FormatError("temporal_fuse: weights must be ((T+1)*C) x C");
    for (const Tensor& m : memory)
        if (!m.same_shape(cur.features))
            throw std::invalid_argument("temporal_fuse: memory shape mismatch");

    Tensor out({C, cur.features.dim(1), cur.features.dim(2)});
    std::vector<const float*> sources;
    sources.push_back(cur.features.data());
    for (const Tensor& m : memory) sources.push_back(m.data());

    for (size_t i = 0; i < cells; ++i) {
        for (uint32_t co = 0; co < C; ++co) {
            double acc = 0;
            for (uint32_t s = 0; s < slots; ++s)
                for (uint32_t ci = 0; ci < C; ++ci)
                    acc += double(sources[s][ci * cells + i]) *
                           weights->at(size_t(s) * C + ci, co);
            out.data()[co * cells + i] = float(acc);
        }
    }
    return out;
}

}  // namespace bevproj
