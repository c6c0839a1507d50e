#ifndef BDLAB_ERROR_HPP
#define BDLAB_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace bdlab {

enum class ErrorCode {
    invalid_bounds,
    negative_density,
    non_finite_value,
    zero_mass,
    std_nonpositive,
    grid_mismatch,
    ratio_unbounded,
    zero_density_node,
    invalid_argument,
    bound_violation,
    positivity_violation,
    cfl_violation,
    trace_too_short,
    gap_nonpositive,
    config_parse,
    io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bdlab

#endif  // BDLAB_ERROR_HPP
