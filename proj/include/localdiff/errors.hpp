#pragma once

#include <stdexcept>
#include <string>

namespace localdiff {

/// Bad or missing input data: malformed files, unknown columns, dates out of
/// range. The CLI maps this to exit code 2.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Estimation or validation failure: rank deficiency, too few clusters, too
/// little overlap. The CLI maps this to exit code 1.
class analysis_error : public std::runtime_error {
public:
    explicit analysis_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace localdiff
