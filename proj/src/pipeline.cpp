#include "bevproj/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bevproj/errors.hpp"

namespace bevproj {

PipelineContext PipelineContext::create(std::vector<CameraRig> rigs,
                                        BevGridSpec grid,
                                        GroundPlane assumed_plane,
                                        FusionConfig cfg) {
    if (rigs.empty()) throw ConfigError("pipeline: no cameras");
    cfg.validate();
    PipelineContext ctx;
    ctx.rigs = std::move(rigs);
    ctx.grid = grid;
    ctx.assumed_plane = assumed_plane;
    ctx.cfg = cfg;
    ctx.pulls.reserve(ctx.rigs.size());
    ctx.dmasks.reserve(ctx.rigs.size());
    for (const CameraRig& rig : ctx.rigs) {
        ctx.pulls.push_back(build_pull_map(rig, grid, assumed_plane));
        ctx.dmasks.push_back(build_distance_mask(rig, assumed_plane));
    }
    return ctx;
}

namespace {

using Clock = std::chrono::steady_clock;

struct StageTimer {
    std::map<std::string, double>& sink;
    Clock::time_point mark = Clock::now();

    void lap(const std::string& stage) {
        const auto now = Clock::now();
        sink[stage] += std::chrono::duration<double, std::milli>(now - mark).count();
        mark = now;
    }
};

Tensor ones_alpha(uint32_t H, uint32_t W) { return Tensor({H, W}, 1.0f); }

// Degenerate parameters for the static path: mean at the pull map,
// sigma_min covariance.
ProjectedParams static_params(const PullMap& pull) {
    ProjectedParams p;
    p.h = pull.h;
    p.w = pull.w;
    const size_t cells = size_t(pull.h) * pull.w;
    p.mu = pull.coords;
    p.sigma.assign(cells * 3, 0.0);
    for (size_t i = 0; i < cells; ++i) {
        p.sigma[3 * i] = kSigmaMin;
        p.sigma[3 * i + 2] = kSigmaMin;
    }
    p.valid = pull.valid;
    return p;
}

void trace_tensor(std::vector<StageChecksum>& trace, const std::string& stage,
                  const Tensor& t) {
    trace.push_back({stage, tensor_checksum(t)});
}

void trace_doubles(std::vector<StageChecksum>& trace, const std::string& stage,
                   const std::vector<double>& v) {
    trace.push_back({stage, tensor_checksum(v.data(), v.size())});
}

}  // namespace

std::pair<FrameOutput, HistoryState> run_frame(const PipelineContext& ctx,
                                               const FrameInput& input,
                                               HistoryState state) {
    const size_t n_cams = ctx.rigs.size();
    if (input.features.size() != n_cams || input.providers.size() != n_cams)
        throw ConfigError("run_frame: camera set does not match the context");
    const FusionConfig& cfg = ctx.cfg;

    FrameOutput out;
    StageTimer timer{out.stage_ms};

    // Lines 3-9: per-camera parameter prediction and projection.
    std::vector<RawBev> per_cam;
    per_cam.reserve(n_cams);
    for (size_t c = 0; c < n_cams; ++c) {
        const CameraRig& rig = ctx.rigs[c];
        const PullMap& pull = ctx.pulls[c];
        const std::string tag = "cam" + std::to_string(c);

        if (!cfg.use_gaussian && !cfg.use_alpha) {
            // rows A / C1: plain static pull
            RawBev raw = static_project(input.features[c], pull);
            timer.lap("projection");
            if (cfg.trace) {
                trace_tensor(out.trace, tag + ".b_raw", raw.features);
                trace_tensor(out.trace, tag + ".alpha", raw.conf);
            }
            per_cam.push_back(std::move(raw));
            continue;
        }

        Tensor alpha_prime;
        ProjectedParams params;
        if (cfg.use_gaussian) {
            const FieldSet fields =
                provide_fields(input.providers[c], rig, ctx.dmasks[c]);
            timer.lap("fields");
            if (cfg.trace) {
                trace_tensor(out.trace, tag + ".mu_prime", fields.mu_prime);
                trace_tensor(out.trace, tag + ".sigma_prime", fields.sigma_prime);
                trace_tensor(out.trace, tag + ".alpha_prime", fields.alpha_prime);
            }
            params = project_params(fields, pull);
            timer.lap("project_params");
            if (cfg.trace) {
                const size_t cells = size_t(params.h) * params.w;
                std::vector<double> off(cells * 2, 0.0);
                for (size_t i = 0; i < cells; ++i) {
                    if (!params.valid[i]) continue;
                    off[2 * i] = params.mu[2 * i] - pull.u(i);
                    off[2 * i + 1] = params.mu[2 * i + 1] - pull.v(i);
                }
                trace_doubles(out.trace, tag + ".mu_off", off);
                trace_doubles(out.trace, tag + ".mu", params.mu);
                trace_doubles(out.trace, tag + ".sigma", params.sigma);
            }
            alpha_prime = cfg.use_alpha ? fields.alpha_prime
                                        : ones_alpha(rig.H, rig.W);
        } else {
            // row C2: static pull locations, predicted confidences
            params = static_params(pull);
            const FieldSet fields =
                provide_fields(input.providers[c], rig, ctx.dmasks[c]);
            alpha_prime = fields.alpha_prime;
            timer.lap("fields");
        }

        const int k = cfg.use_gaussian ? cfg.K : 1;
        const SampleMode mode =
            cfg.use_gaussian ? cfg.mode : SampleMode::Deterministic;
        // per-camera seed offset keeps sample streams distinct across cameras
        RawBev raw = prob_project(input.features[c], params, alpha_prime, k, mode,
                                  cfg.seed + c);
        timer.lap("projection");
        if (cfg.trace) {
            trace_tensor(out.trace, tag + ".b_raw", raw.features);
            trace_tensor(out.trace, tag + ".alpha", raw.conf);
        }
        per_cam.push_back(std::move(raw));
    }

    // Line 11: camera merge.
    RawBev merged = merge_cameras(per_cam);
    timer.lap("merge_cameras");
    if (cfg.trace) {
        trace_tensor(out.trace, "merge.b_raw", merged.features);
        trace_tensor(out.trace, "merge.alpha", merged.conf);
    }
    std::vector<uint8_t> coverage = merged.valid;
    if (cfg.keep_per_camera) out.per_camera = std::move(per_cam);

    // Line 12: history merge, skipped entirely when ablated or cold.
    if (cfg.use_raw_hist && state.raw_hist.has_value()) {
        const EgoPose delta = compose(inverse(input.pose), state.pose_hist);
        RawBev warped;
        warped.features = warp_bev(ctx.grid, delta, state.raw_hist->features);
        warped.conf = warp_bev(ctx.grid, delta, state.raw_hist->conf);
        warped.valid.assign(merged.valid.size(), 1);
        timer.lap("warp_history");
        merged = merge_history(merged, warped);
        timer.lap("merge_history");
    }
    if (cfg.trace) {
        trace_tensor(out.trace, "hist.b_raw", merged.features);
        trace_tensor(out.trace, "hist.alpha", merged.conf);
    }

    // Line 13: memory selection and temporal fusion.
    std::vector<Tensor> memory;
    if (!state.ring.empty()) {
        memory = select_memory(state, input.pose, ctx.grid, cfg);
    } else {
        // cold start: T zero grids
        memory.assign(size_t(cfg.T), Tensor(merged.features.dims()));
    }
    timer.lap("select_memory");
    out.fused = temporal_fuse(merged, memory, ctx.fusion_weights);
    timer.lap("temporal_fuse");
    if (cfg.trace) trace_tensor(out.trace, "fused.b", out.fused);

    // Line 14: save B, B_raw, alpha.
    if (cfg.use_raw_hist)
        update_raw_history(state, merged, input.pose, cfg.gamma);
    state.ring.push_back({out.fused, input.pose});
    while (state.ring.size() > HistoryState::kRingCapacity) state.ring.pop_front();
    timer.lap("save_history");
    if (cfg.trace && state.raw_hist) {
        trace_tensor(out.trace, "save.b_raw_hist", state.raw_hist->features);
        trace_tensor(out.trace, "save.alpha_hist", state.raw_hist->conf);
    }

    out.merged = std::move(merged);
    out.merged.valid = std::move(coverage);
    return {std::move(out), std::move(state)};
}

std::vector<TrajectoryPoint> parse_trajectory_text(const std::string& text,
                                                   const std::string& origin) {
    std::vector<TrajectoryPoint> traj;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        TrajectoryPoint p;
        if (!(ls >> p.t)) continue;  // blank line
        if (!(ls >> p.pose.x >> p.pose.y >> p.pose.yaw))
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 't x y yaw'");
        p.pose.yaw = wrap_angle(p.pose.yaw);
        traj.push_back(p);
    }
    return traj;
}

std::vector<TrajectoryPoint> parse_trajectory(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open trajectory file: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_trajectory_text(buf.str(), path.string());
}

namespace {

void add_feature_noise(Tensor& features, double sigma, uint64_t seed,
                       uint64_t stream) {
    if (sigma <= 0) return;
    float* p = features.data();
    for (size_t i = 0; i < features.size(); ++i)
        p[i] += float(sigma * rng::normal_pair(seed, stream, i).x());
}

FieldProvider build_provider(const SequenceConfig& seq, size_t cam,
                             const EgoPose& pose) {
    switch (seq.provider) {
        case ProviderKind::Zero:
            return ZeroFields{};
        case ProviderKind::SlopeOracle:
            return SlopeOracleFields{seq.scene.true_plane, seq.assumed_plane};
        case ProviderKind::OccluderMask: {
            OccluderMaskFields om;
            om.mask = occluder_image_mask(seq.scene, seq.rigs[cam], pose);
            return om;
        }
        case ProviderKind::Constant:
            return seq.constant_fields;
        case ProviderKind::Loaded:
            if (seq.loaded_fields.size() != seq.rigs.size())
                throw ConfigError("sequence: loaded fields must list one entry per camera");
            return seq.loaded_fields[cam];
    }
    throw ConfigError("sequence: unknown provider kind");
}

}  // namespace

SequenceResult run_sequence(const SequenceConfig& seq) {
    if (seq.trajectory.empty())
        throw ConfigError("sequence: empty trajectory (need at least one frame)");
    PipelineContext ctx =
        PipelineContext::create(seq.rigs, seq.grid, seq.assumed_plane, seq.fusion);

    SequenceResult res;
    HistoryState state;
    const auto t_start = Clock::now();
    double frame_seconds = 0;

    for (size_t f = 0; f < seq.trajectory.size(); ++f) {
        const EgoPose pose = seq.trajectory[f].pose;
        FrameInput input;
        input.pose = pose;
        input.frame_index = int64_t(f);
        for (size_t c = 0; c < seq.rigs.size(); ++c) {
            Tensor img = render_camera(seq.scene, seq.rigs[c], pose);
            add_feature_noise(img, seq.noise_sigma, seq.fusion.seed ^ 0x6e6f697365ULL,
                              f * seq.rigs.size() + c);
            input.features.push_back(std::move(img));
            input.providers.push_back(build_provider(seq, c, pose));
        }

        const auto t_frame = Clock::now();
        auto [output, next_state] = run_frame(ctx, input, std::move(state));
        frame_seconds +=
            std::chrono::duration<double>(Clock::now() - t_frame).count();
        state = std::move(next_state);

        const Tensor oracle = rasterize_bev_oracle(seq.scene, seq.grid, pose);
        std::vector<uint8_t> mask =
            erode_mask(output.merged.valid, seq.grid.h, seq.grid.w);
        if (seq.score_max_range > 0)
            mask = intersect_masks(mask, range_mask(seq.grid, seq.score_max_range));
        res.per_frame.push_back(score(output.fused, oracle, mask));
        res.score_masks.push_back(std::move(mask));

        for (const auto& [k, v] : output.stage_ms) res.stage_ms[k] += v;
        if (seq.fusion.trace) res.traces.push_back(std::move(output.trace));
        res.conf.push_back(std::move(output.merged.conf));
        res.fused.push_back(std::move(output.fused));
    }

    res.total_seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
    res.fps = frame_seconds > 0 ? double(seq.trajectory.size()) / frame_seconds : 0;

    double mse = 0, psnr = 0, iou = 0;
    size_t cells = 0;
    for (const ScoreReport& r : res.per_frame) {
        mse += r.mse;
        psnr += std::isinf(r.psnr_db) ? 99.0 : r.psnr_db;
        iou += r.iou;
        cells += r.valid_cells;
    }
    const double n = double(res.per_frame.size());
    res.mean.mse = mse / n;
    res.mean.psnr_db = psnr / n;
    res.mean.iou = iou / n;
    res.mean.valid_cells = cells;
    return res;
}

}  // namespace bevproj
