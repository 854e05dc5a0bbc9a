#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nhd {

enum class ErrorCode {
    InvalidInput,
    DimensionMismatch,
    NotHermitian,
    NotPositiveDefinite,
    NotUnitary,
    UnsupportedHamiltonian,
    InvalidStep,
    OutsidePTSymmetric,
    InvalidWindow,
    NaimarkInvalid,
    Singular,
    InvalidC,
    EmptyBranch,
    TooMixed,
    IllConditioned,
    ConfigError,
    IoError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotUnitary: return "NotUnitary";
    case ErrorCode::UnsupportedHamiltonian: return "UnsupportedHamiltonian";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::OutsidePTSymmetric: return "OutsidePTSymmetric";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::NaimarkInvalid: return "NaimarkInvalid";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::InvalidC: return "InvalidC";
    case ErrorCode::EmptyBranch: return "EmptyBranch";
    case ErrorCode::TooMixed: return "TooMixed";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/**
 * @brief Single exception type for the library.
 *
 * Some errors carry a numeric payload: the offending minimum eigenvalue for
 * NotPositiveDefinite / NaimarkInvalid / InvalidC, the branch probability for
 * EmptyBranch, and so on. NaimarkInvalid additionally records the time.
 */
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what,
          std::optional<double> value = std::nullopt,
          std::optional<double> time = std::nullopt)
        : std::runtime_error(std::string(to_string(code)) + ": " + what),
          code_(code), value_(value), time_(time) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] std::optional<double> value() const noexcept { return value_; }
    [[nodiscard]] std::optional<double> time() const noexcept { return time_; }

  private:
    ErrorCode code_;
    std::optional<double> value_;
    std::optional<double> time_;
};

/// Config errors also name the offending field, e.g. "r_values[2]".
class ConfigError : public Error {
  public:
    ConfigError(std::string field, const std::string &what)
        : Error(ErrorCode::ConfigError, field + ": " + what),
          field_(std::move(field)) {}

    [[nodiscard]] const std::string &field() const noexcept { return field_; }

  private:
    std::string field_;
};

} // namespace nhd
