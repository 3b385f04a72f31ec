#pragma once

#include <stdexcept>
#include <string>

namespace pnd {

enum class ErrorKind {
    EmptyCorpus,
    SingleClassData,
    AmbiguousEvent,
    MalformedRow,
    NonMonotonicTime,
    MissingData,
    TargetNotListed,
    EmptySplit,
    Leakage,
    UnknownSymbol,
    IdOutOfRange,
    Divergence,
    InfeasibleConfig,
    Format,
    Config,
    MissingInput,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::SingleClassData: return "SingleClassData";
        case ErrorKind::AmbiguousEvent: return "AmbiguousEvent";
        case ErrorKind::MalformedRow: return "MalformedRow";
        case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
        case ErrorKind::MissingData: return "MissingData";
        case ErrorKind::TargetNotListed: return "TargetNotListed";
        case ErrorKind::EmptySplit: return "EmptySplit";
        case ErrorKind::Leakage: return "Leakage";
        case ErrorKind::UnknownSymbol: return "UnknownSymbol";
        case ErrorKind::IdOutOfRange: return "IdOutOfRange";
        case ErrorKind::Divergence: return "Divergence";
        case ErrorKind::InfeasibleConfig: return "InfeasibleConfig";
        case ErrorKind::Format: return "Format";
        case ErrorKind::Config: return "Config";
        case ErrorKind::MissingInput: return "MissingInput";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// One exception type per kind so callers and tests can catch precisely.
template <ErrorKind K>
class KindError : public Error {
public:
    explicit KindError(const std::string& what) : Error(K, what) {}
};

using EmptyCorpus = KindError<ErrorKind::EmptyCorpus>;
using SingleClassData = KindError<ErrorKind::SingleClassData>;
using AmbiguousEvent = KindError<ErrorKind::AmbiguousEvent>;
using NonMonotonicTime = KindError<ErrorKind::NonMonotonicTime>;
using MissingData = KindError<ErrorKind::MissingData>;
using TargetNotListed = KindError<ErrorKind::TargetNotListed>;
using EmptySplit = KindError<ErrorKind::EmptySplit>;
using LeakageError = KindError<ErrorKind::Leakage>;
using UnknownSymbol = KindError<ErrorKind::UnknownSymbol>;
using IdOutOfRange = KindError<ErrorKind::IdOutOfRange>;
using Divergence = KindError<ErrorKind::Divergence>;
using InfeasibleConfig = KindError<ErrorKind::InfeasibleConfig>;
using FormatError = KindError<ErrorKind::Format>;
using ConfigError = KindError<ErrorKind::Config>;
using MissingInput = KindError<ErrorKind::MissingInput>;

class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line, const std::string& what)
        : Error(ErrorKind::MalformedRow, "line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

}  // namespace pnd
