#pragma once

#include <stdexcept>
#include <string>

namespace ranrac {

/// Failure categories. Each maps onto a process exit code in the CLI.
enum class ErrorKind {
    config,             ///< invalid configuration or usage (exit 2)
    numerical,          ///< rank deficiency, degenerate geometry (exit 3)
    rejection_exhausted ///< occlusion rejection loop gave up (exit 4)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

    [[nodiscard]] int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::config: return 2;
            case ErrorKind::numerical: return 3;
            case ErrorKind::rejection_exhausted: return 4;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// A colour channel outside the declared colour space.
class RangeError : public ConfigError {
public:
    RangeError(int channel, const std::string& what) : ConfigError(what), channel_(channel) {}
    [[nodiscard]] int channel() const noexcept { return channel_; }

private:
    int channel_;
};

class RankDeficiencyError : public Error {
public:
    explicit RankDeficiencyError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Zero counted pixels in an observation, or an empty object mask.
class DegenerateError : public Error {
public:
    DegenerateError(long id, const std::string& what) : Error(ErrorKind::numerical, what), id_(id) {}
    [[nodiscard]] long id() const noexcept { return id_; }

private:
    long id_;
};

}  // namespace ranrac
