#pragma once

#include <stdexcept>
#include <string>

namespace spacoclust {

/// Failure categories surfaced across the library.  CLI layers map Parse /
/// Config codes to exit status 2 and the numeric codes to exit status 3.
enum class Errc {
    NonFiniteValue,
    DuplicateColumnId,
    DuplicateRowId,
    DimensionMismatch,
    NonPositiveParameter,
    NotPositiveSemidefinite,
    NotPositiveDefinite,
    StaleCache,
    SingleColumnCluster,
    EmptyColumnCluster,
    OptimizerFailure,
    UndefinedMean,
    InvalidLevel,
    EmptyBlock,
    LengthMismatch,
    TooShort,
    DegreesOfFreedomTooSmall,
    ConfigInvalid,
    ParseError,
    UnknownSpotId,
    MissingCoordinate,
    IoError,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::DuplicateColumnId: return "DuplicateColumnId";
        case Errc::DuplicateRowId: return "DuplicateRowId";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::NonPositiveParameter: return "NonPositiveParameter";
        case Errc::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
        case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
        case Errc::StaleCache: return "StaleCache";
        case Errc::SingleColumnCluster: return "SingleColumnCluster";
        case Errc::EmptyColumnCluster: return "EmptyColumnCluster";
        case Errc::OptimizerFailure: return "OptimizerFailure";
        case Errc::UndefinedMean: return "UndefinedMean";
        case Errc::InvalidLevel: return "InvalidLevel";
        case Errc::EmptyBlock: return "EmptyBlock";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::TooShort: return "TooShort";
        case Errc::DegreesOfFreedomTooSmall: return "DegreesOfFreedomTooSmall";
        case Errc::ConfigInvalid: return "ConfigInvalid";
        case Errc::ParseError: return "ParseError";
        case Errc::UnknownSpotId: return "UnknownSpotId";
        case Errc::MissingCoordinate: return "MissingCoordinate";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace spacoclust
