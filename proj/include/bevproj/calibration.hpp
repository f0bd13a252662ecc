#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bevproj/geometry.hpp"

namespace bevproj {

// Calibration file grammar (one camera per block, '#' starts a comment):
//
//   camera <name>
//   fx <px>  fy <px>  cx <px>  cy <px>
//   H <rows> W <cols>
//   pose r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz
//
// `pose` holds the 3x4 camera-to-ego matrix, row-major. Keys may share a
// line or not. Rotations must be orthonormal within 1e-6; violations and
// missing or degenerate fields raise ConfigError naming the field.
std::vector<CameraRig> parse_calibration(const std::filesystem::path& path);
std::vector<CameraRig> parse_calibration_text(const std::string& text,
                                              const std::string& origin);

void write_calibration(const std::filesystem::path& path,
                       const std::vector<CameraRig>& rigs);

}  // namespace bevproj
