#include "bevproj/calibration.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bevproj/errors.hpp"

namespace bevproj {

namespace {

struct PendingCamera {
    CameraRig rig;
    bool has_fx = false, has_fy = false, has_cx = false, has_cy = false;
    bool has_h = false, has_w = false, has_pose = false;
};

void finish(PendingCamera& pc, std::vector<CameraRig>& out,
            const std::string& origin) {
    auto missing = [&](const char* f) {
        throw ConfigError(origin + ": camera '" + pc.rig.name +
                          "' is missing field " + f);
    };
    if (!pc.has_fx) missing("fx");
    if (!pc.has_fy) missing("fy");
    if (!pc.has_cx) missing("cx");
    if (!pc.has_cy) missing("cy");
    if (!pc.has_h) missing("H");
    if (!pc.has_w) missing("W");
    if (!pc.has_pose) missing("pose");
    pc.rig.validate(1e-6);
    out.push_back(pc.rig);
}

}  // namespace

std::vector<CameraRig> parse_calibration_text(const std::string& text,
                                              const std::string& origin) {
    std::vector<CameraRig> rigs;
    PendingCamera cur;
    bool open = false;

    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        while (ls >> key) {
            auto numeric = [&](const char* field) -> double {
                double v;
                if (!(ls >> v) || !std::isfinite(v))
                    throw ConfigError(origin + ":" + std::to_string(line_no) +
                                      ": bad numeric value for " + field);
                return v;
            };
            if (key == "camera") {
                if (open) finish(cur, rigs, origin);
                cur = PendingCamera{};
                open = true;
                if (!(ls >> cur.rig.name))
                    throw ConfigError(origin + ":" + std::to_string(line_no) +
                                      ": camera block needs a name");
            } else if (!open) {
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": key '" + key + "' before any camera block");
            } else if (key == "fx") {
                cur.rig.fx = numeric("fx");
                cur.has_fx = true;
            } else if (key == "fy") {
                cur.rig.fy = numeric("fy");
                cur.has_fy = true;
            } else if (key == "cx") {
                cur.rig.cx = numeric("cx");
                cur.has_cx = true;
            } else if (key == "cy") {
                cur.rig.cy = numeric("cy");
                cur.has_cy = true;
            } else if (key == "H") {
                const double v = numeric("H");
                if (v < 1 || v != std::floor(v))
                    throw ConfigError(origin + ":" + std::to_string(line_no) +
                                      ": H must be a positive integer");
                cur.rig.H = uint32_t(v);
                cur.has_h = true;
            } else if (key == "W") {
                const double v = numeric("W");
                if (v < 1 || v != std::floor(v))
                    throw ConfigError(origin + ":" + std::to_string(line_no) +
                                      ": W must be a positive integer");
                cur.rig.W = uint32_t(v);
                cur.has_w = true;
            } else if (key == "pose") {
                double m[12];
                for (double& x : m) x = numeric("pose");
                cur.rig.R << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
                cur.rig.t << m[3], m[7], m[11];
                cur.has_pose = true;
            } else {
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
            }
        }
    }
    if (open) finish(cur, rigs, origin);
    if (rigs.empty()) throw ConfigError(origin + ": no camera blocks found");
    return rigs;
}

std::vector<CameraRig> parse_calibration(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open calibration file: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_calibration_text(buf.str(), path.string());
}

void write_calibration(const std::filesystem::path& path,
                       const std::vector<CameraRig>& rigs) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write calibration file: " + path.string());
    os.precision(17);
    for (const auto& rig : rigs) {
        os << "camera " << rig.name << "\n";
        os << "fx " << rig.fx << " fy " << rig.fy << " cx " << rig.cx << " cy "
           << rig.cy << "\n";
        os << "H " << rig.H << " W " << rig.W << "\n";
        os << "pose";
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) os << " " << rig.R(r, c);
            os << " " << rig.t(r);
        }
        os << "\n\n";
    }
}

}  // namespace bevproj
