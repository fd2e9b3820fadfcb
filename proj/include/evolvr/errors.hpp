#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace evolvr {

// Usage errors are caller mistakes (bad paths, bad config, empty inputs) and map
// to process exit code 2; runtime errors map to exit code 3.
enum class ErrorKind { usage, runtime };

// Every failure carries a stable machine-readable code ("io.not_found",
// "parse.no_score_line", ...) next to the human-readable message.  Codes are
// part of the CLI and HTTP contracts and must not change casually.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, ErrorKind kind = ErrorKind::runtime)
        : std::runtime_error(message), code_(std::move(code)), kind_(kind) {}

    const std::string& code() const noexcept { return code_; }
    ErrorKind kind() const noexcept { return kind_; }

private:
    std::string code_;
    ErrorKind kind_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message,
                              ErrorKind kind = ErrorKind::runtime) {
    throw Error(std::move(code), message, kind);
}

}  // namespace evolvr
