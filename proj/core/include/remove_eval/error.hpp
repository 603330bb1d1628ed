#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace remove_eval {

enum class ErrorCode {
    Configuration,
    DegenerateMask,
    ZeroVector,
    EncoderFailure,
    Load,
    AdapterContract,
    ReferenceRequired,
    Validation,
    Parse,
    Io,
    UndefinedCorrelation,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `code()` classifies the failure,
/// `stage()` names the pipeline stage that raised it (may be empty).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string stage = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Copy of this error tagged with `stage`, unless one is already set.
    Error with_stage(std::string stage) const;

private:
    ErrorCode code_;
    std::string stage_;
    std::string detail_;
};

}  // namespace remove_eval
