#include "faqr/error.hpp"

namespace faqr {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::dimension_error: return "DimensionError";
        case ErrorCode::degenerate_column: return "DegenerateColumn";
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::missing_value: return "MissingValue";
        case ErrorCode::io_error: return "IoError";
        case ErrorCode::window_too_large: return "WindowTooLarge";
        case ErrorCode::rank_deficient: return "RankDeficient";
        case ErrorCode::degenerate_spectrum: return "DegenerateSpectrum";
        case ErrorCode::non_finite: return "NonFinite";
        case ErrorCode::non_smooth_kernel: return "NonSmoothKernel";
        case ErrorCode::inner_loop_stall: return "InnerLoopStall";
        case ErrorCode::singular: return "Singular";
    }
    return "Unknown";
}

bool is_input_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::dimension_error:
        case ErrorCode::degenerate_column:
        case ErrorCode::parse_error:
        case ErrorCode::missing_value:
        case ErrorCode::io_error:
        case ErrorCode::window_too_large:
            return true;
        default:
            return false;
    }
}

}  // namespace faqr
