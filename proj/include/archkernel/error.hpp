#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace archkernel {

/// Failure categories surfaced by the library. The CLI maps them to exit
/// codes and machine-readable diagnostics.
enum class Errc {
    DomainError,
    InadmissibleParameter,
    RangeError,
    NonInvertible,
    NotStrict,
    NotDifferentiable,
    InvalidBox,
    StepTooSmall,
    ZeroMass,
    DimensionMismatch,
    IntegrationFailure,
    NumericalFailure,
    DegenerateSample,
    OutOfRangeTau,
    InvalidConfig,
};

constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::DomainError: return "DomainError";
        case Errc::InadmissibleParameter: return "InadmissibleParameter";
        case Errc::RangeError: return "RangeError";
        case Errc::NonInvertible: return "NonInvertible";
        case Errc::NotStrict: return "NotStrict";
        case Errc::NotDifferentiable: return "NotDifferentiable";
        case Errc::InvalidBox: return "InvalidBox";
        case Errc::StepTooSmall: return "StepTooSmall";
        case Errc::ZeroMass: return "ZeroMass";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::IntegrationFailure: return "IntegrationFailure";
        case Errc::NumericalFailure: return "NumericalFailure";
        case Errc::DegenerateSample: return "DegenerateSample";
        case Errc::OutOfRangeTau: return "OutOfRangeTau";
        case Errc::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

namespace detail {

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace detail
}  // namespace archkernel
