#include "glissade/error.hpp"

namespace glissade {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::NonMonotonicTime: return "NonMonotonicTime";
        case Errc::EvenWindow: return "EvenWindow";
        case Errc::TooShort: return "TooShort";
        case Errc::NonPositiveStep: return "NonPositiveStep";
        case Errc::EmptyOnsets: return "EmptyOnsets";
        case Errc::DegenerateProfile: return "DegenerateProfile";
        case Errc::TooFewPoints: return "TooFewPoints";
        case Errc::NonFiniteResidual: return "NonFiniteResidual";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::NonPositiveThreshold: return "NonPositiveThreshold";
        case Errc::Unconverged: return "Unconverged";
        case Errc::SingleClassData: return "SingleClassData";
        case Errc::EmptyData: return "EmptyData";
        case Errc::NotTrained: return "NotTrained";
        case Errc::NonFiniteFeature: return "NonFiniteFeature";
        case Errc::TooFewSamples: return "TooFewSamples";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::UnknownKind: return "UnknownKind";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

namespace {

std::string compose(Errc code, const std::string& message, std::optional<std::size_t> row) {
    std::string out(to_string(code));
    if (row) out += " (row " + std::to_string(*row) + ")";
    out += ": ";
    out += message;
    return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> row)
    : std::runtime_error(compose(code, message, row)), code_(code), row_(row), message_(message) {}

}  // namespace glissade
