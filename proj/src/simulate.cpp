#include "bevproj/simulate.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "bevproj/calibration.hpp"
#include "bevproj/errors.hpp"

namespace bevproj {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

const char* provider_name(ProviderKind p) {
    switch (p) {
        case ProviderKind::Zero: return "zero";
        case ProviderKind::SlopeOracle: return "slope-oracle";
        case ProviderKind::OccluderMask: return "occluder-mask";
        case ProviderKind::Constant: return "constant";
        case ProviderKind::Loaded: return "loaded";
    }
    return "?";
}

std::string frame_tag(size_t f) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03zu", f);
    return buf;
}

}  // namespace

SequenceResult simulate_run(const SimulateOptions& opts) {
    SequenceConfig seq;
    seq.rigs = parse_calibration(opts.calib_path);
    seq.grid = BevGridSpec::from_ranges(opts.x_min, opts.x_max, opts.y_min,
                                        opts.y_max, opts.cell);
    seq.fusion = opts.fusion;
    seq.scene = parse_scene(opts.scene_path);
    seq.trajectory = parse_trajectory(opts.trajectory_path);
    seq.provider = opts.provider;
    seq.constant_fields = opts.constant_fields;
    seq.noise_sigma = opts.noise_sigma;
    seq.score_max_range = opts.score_max_range;

    if (opts.frames) {
        if (*opts.frames == 0)
            throw ConfigError("simulate: empty sequence rejected (--frames 0)");
        if (*opts.frames < seq.trajectory.size())
            seq.trajectory.resize(*opts.frames);
    }
    if (seq.trajectory.empty())
        throw ConfigError("simulate: trajectory has no poses");

    std::filesystem::create_directories(opts.out_dir);
    SequenceResult res = run_sequence(seq);

    {
        std::ofstream rep(opts.out_dir / "report.txt");
        if (!rep) throw ConfigError("cannot write report: " +
                                    (opts.out_dir / "report.txt").string());
        rep << "frames=" << seq.trajectory.size() << "\n";
        rep << "cameras=" << seq.rigs.size() << "\n";
        rep << "grid_h=" << seq.grid.h << "\n";
        rep << "grid_w=" << seq.grid.w << "\n";
        rep << "cell=" << format_double(seq.grid.cell) << "\n";
        rep << "seed=" << seq.fusion.seed << "\n";
        rep << "K=" << seq.fusion.K << "\n";
        rep << "mode="
            << (seq.fusion.mode == SampleMode::Stochastic ? "stochastic"
                                                          : "deterministic")
            << "\n";
        rep << "gamma=" << format_double(seq.fusion.gamma) << "\n";
        rep << "T=" << seq.fusion.T << "\n";
        rep << "use_gaussian=" << int(seq.fusion.use_gaussian) << "\n";
        rep << "use_alpha=" << int(seq.fusion.use_alpha) << "\n";
        rep << "use_raw_hist=" << int(seq.fusion.use_raw_hist) << "\n";
        rep << "provider=" << provider_name(seq.provider) << "\n";
        rep << "noise_sigma=" << format_double(seq.noise_sigma) << "\n";
        for (size_t f = 0; f < res.per_frame.size(); ++f) {
            const ScoreReport& r = res.per_frame[f];
            rep << "frame." << f << ".mse=" << format_double(r.mse) << "\n";
            rep << "frame." << f << ".psnr_db=" << format_double(r.psnr_db) << "\n";
            rep << "frame." << f << ".iou=" << format_double(r.iou) << "\n";
            rep << "frame." << f << ".valid_cells=" << r.valid_cells << "\n";
        }
        rep << "mse=" << format_double(res.mean.mse) << "\n";
        rep << "psnr_db=" << format_double(res.mean.psnr_db) << "\n";
        rep << "iou=" << format_double(res.mean.iou) << "\n";
    }

    {
        std::ofstream tim(opts.out_dir / "timing.txt");
        tim << "fps=" << format_double(res.fps) << "\n";
        tim << "total_s=" << format_double(res.total_seconds) << "\n";
        for (const auto& [stage, ms] : res.stage_ms)
            tim << "stage." << stage << "_ms=" << format_double(ms) << "\n";
    }

    if (opts.dump_bev) {
        for (size_t f = 0; f < res.fused.size(); ++f) {
            write_bvt(opts.out_dir / ("fused_" + frame_tag(f) + ".bvt"),
                      res.fused[f]);
            write_bvt(opts.out_dir / ("conf_" + frame_tag(f) + ".bvt"),
                      res.conf[f]);
        }
    }
    if (opts.previews) {
        for (size_t f = 0; f < res.fused.size(); ++f) {
            const Tensor& fused = res.fused[f];
            const uint32_t h = fused.dim(1), w = fused.dim(2);
            for (uint32_t c = 0; c < fused.dim(0); ++c)
                write_pgm(opts.out_dir / ("fused_" + frame_tag(f) + "_ch" +
                                          std::to_string(c) + ".pgm"),
                          fused.plane(c), h, w);
            write_pgm(opts.out_dir / ("conf_" + frame_tag(f) + ".pgm"),
                      res.conf[f].data(), h, w);
        }
    }
    return res;
}

}  // namespace bevproj
