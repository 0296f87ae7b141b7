#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gwprof {

/// Base class of every error the library throws. `kind()` is a stable,
/// machine-readable tag used in CLI diagnostics and reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define GWPROF_DEFINE_ERROR(Name)                                                  \
    class Name : public Error {                                                    \
    public:                                                                        \
        explicit Name(const std::string& what) : Error(#Name, what) {}             \
    }

GWPROF_DEFINE_ERROR(MalformedMac);
GWPROF_DEFINE_ERROR(DuplicateSample);
GWPROF_DEFINE_ERROR(InsufficientSamples);
GWPROF_DEFINE_ERROR(EmptySeries);
GWPROF_DEFINE_ERROR(InsufficientData);
GWPROF_DEFINE_ERROR(NegativeInput);
GWPROF_DEFINE_ERROR(DegenerateMatrix);
GWPROF_DEFINE_ERROR(LabelMismatch);
GWPROF_DEFINE_ERROR(EmptyDataset);
GWPROF_DEFINE_ERROR(SingleClass);
GWPROF_DEFINE_ERROR(LengthMismatch);
GWPROF_DEFINE_ERROR(TooFewPerClass);
GWPROF_DEFINE_ERROR(TooFewMinority);
GWPROF_DEFINE_ERROR(ConfigError);
GWPROF_DEFINE_ERROR(IoError);

#undef GWPROF_DEFINE_ERROR

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("ParseError", "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A pipeline stage failed; `stage()` names it, `what()` carries the cause.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error("StageError", stage + ": " + cause), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace gwprof
