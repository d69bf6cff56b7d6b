#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace ranrac {

/// Shortest round-trip decimal form of a double; stable across runs, so CSV
/// artifacts are byte-reproducible.
[[nodiscard]] inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

}  // namespace ranrac
