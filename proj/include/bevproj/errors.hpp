#pragma once

#include <stdexcept>
#include <string>

namespace bevproj {

// Bad user-supplied configuration: calibration files, scene configs,
// degenerate camera parameters. CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed binary artifacts: tensor files with wrong magic, dtype,
// shape, or trailing bytes.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bevproj
