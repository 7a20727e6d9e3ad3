#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seat {

enum class ErrorCode {
    invalid_argument,
    not_found,
    out_of_bounds,
    empty_input,
    empty_surface,
    spec_error,
    placement_error,
    workspace_full,
    not_graspable,
    conflict,
    io_error,
};

inline std::string_view to_string(ErrorCode c) {
    switch (c) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::out_of_bounds: return "out_of_bounds";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::empty_surface: return "empty_surface";
    case ErrorCode::spec_error: return "spec_error";
    case ErrorCode::placement_error: return "placement_error";
    case ErrorCode::workspace_full: return "workspace_full";
    case ErrorCode::not_graspable: return "not_graspable";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace seat
