#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qest {

enum class ErrorCode {
    invalid_argument,
    non_finite,
    not_psd,
    singular,
    unsupported_structure,
    infeasible_mse,
    singular_model,
    rank_deficient,
    invalid_povm,
    non_convergence,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::non_finite: return "non-finite";
    case ErrorCode::not_psd: return "not-psd";
    case ErrorCode::singular: return "singular";
    case ErrorCode::unsupported_structure: return "unsupported-structure";
    case ErrorCode::infeasible_mse: return "infeasible-mse";
    case ErrorCode::singular_model: return "singular-model";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::invalid_povm: return "invalid-povm";
    case ErrorCode::non_convergence: return "non-convergence";
    }
    return "unknown";
}

/// Library-wide exception. The code lets callers branch on the failure class
/// without parsing the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace qest
