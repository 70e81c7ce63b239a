#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace glissade {

enum class Errc {
    MalformedRow,
    EmptyInput,
    NonMonotonicTime,
    EvenWindow,
    TooShort,
    NonPositiveStep,
    EmptyOnsets,
    DegenerateProfile,
    TooFewPoints,
    NonFiniteResidual,
    LengthMismatch,
    NonPositiveThreshold,
    Unconverged,
    SingleClassData,
    EmptyData,
    NotTrained,
    NonFiniteFeature,
    TooFewSamples,
    InvalidConfig,
    UnknownKind,
    Io,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library. `code()` identifies the condition;
/// `row()` is set for parse errors and is the 0-based line index in the input.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::optional<std::size_t> row = std::nullopt);

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> row() const noexcept { return row_; }
    /// The message without the code/row prefix that what() carries.
    const std::string& message() const noexcept { return message_; }

private:
    Errc code_;
    std::optional<std::size_t> row_;
    std::string message_;
};

}  // namespace glissade
