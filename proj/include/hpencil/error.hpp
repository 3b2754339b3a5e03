#ifndef HPENCIL_ERROR_HPP
#define HPENCIL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace hpencil {

enum class ErrorCode {
    invalid_spec,
    shape,
    incomplete_input,
    order_mismatch,
    insufficient_samples,
    domain,
    io,
    parse,
    degenerate_pencil,
    solver,
    insufficient_signal,
    nonphysical_eigenvalue,
    conditioning,
    division_degeneracy,
    statistics,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_spec: return "invalid_spec";
    case ErrorCode::shape: return "shape";
    case ErrorCode::incomplete_input: return "incomplete_input";
    case ErrorCode::order_mismatch: return "order_mismatch";
    case ErrorCode::insufficient_samples: return "insufficient_samples";
    case ErrorCode::domain: return "domain";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::degenerate_pencil: return "degenerate_pencil";
    case ErrorCode::solver: return "solver";
    case ErrorCode::insufficient_signal: return "insufficient_signal";
    case ErrorCode::nonphysical_eigenvalue: return "nonphysical_eigenvalue";
    case ErrorCode::conditioning: return "conditioning";
    case ErrorCode::division_degeneracy: return "division_degeneracy";
    case ErrorCode::statistics: return "statistics";
    }
    return "unknown";
}

/// True for failures caused by the caller's input rather than by the numerics.
constexpr bool is_input_error(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_spec:
    case ErrorCode::shape:
    case ErrorCode::incomplete_input:
    case ErrorCode::order_mismatch:
    case ErrorCode::insufficient_samples:
    case ErrorCode::domain:
    case ErrorCode::io:
    case ErrorCode::parse: return true;
    default: return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace hpencil

#endif // HPENCIL_ERROR_HPP
