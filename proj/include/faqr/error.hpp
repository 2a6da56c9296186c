#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace faqr {

enum class ErrorCode {
    invalid_argument,
    dimension_error,
    degenerate_column,
    parse_error,
    missing_value,
    io_error,
    window_too_large,
    rank_deficient,
    degenerate_spectrum,
    non_finite,
    non_smooth_kernel,
    inner_loop_stall,
    singular,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Input errors map to CLI exit code 2, everything else is a numerical failure (exit code 3).
bool is_input_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace faqr
