#pragma once

#include <stdexcept>
#include <string>

namespace qsurf {

enum class ErrorCode {
    invalid_argument,
    support_escapes_box,
    ball_escapes_box,
    negativity,
    length_mismatch,
    ordering_violation,
    box_too_small,
    non_convergence,
    family_disagreement,
    segregation_violation,
    coincident_points,
    radius_below_grid,
    no_root,
    nonvanishing_at_sphere,
    overlap,
    parse_error,
    validation_error,
    missing_input,
    io_error,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace qsurf
