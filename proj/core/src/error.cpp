#include "remove_eval/error.hpp"

namespace remove_eval {

namespace {

std::string compose(ErrorCode code, const std::string& stage, const std::string& detail) {
    std::string out;
    if (!stage.empty()) out += "[" + stage + "] ";
    out += std::string(to_string(code));
    out += ": ";
    out += detail;
    return out;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Configuration: return "configuration error";
        case ErrorCode::DegenerateMask: return "degenerate mask";
        case ErrorCode::ZeroVector: return "zero vector";
        case ErrorCode::EncoderFailure: return "encoder failure";
        case ErrorCode::Load: return "load error";
        case ErrorCode::AdapterContract: return "adapter contract violation";
        case ErrorCode::ReferenceRequired: return "reference required";
        case ErrorCode::Validation: return "validation error";
        case ErrorCode::Parse: return "parse error";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::UndefinedCorrelation: return "undefined correlation";
    }
    return "error";
}

Error::Error(ErrorCode code, std::string message, std::string stage)
    : std::runtime_error(compose(code, stage, message)),
      code_(code),
      stage_(std::move(stage)),
      detail_(std::move(message)) {}

Error Error::with_stage(std::string stage) const {
    if (!stage_.empty()) return *this;
    return Error(code_, detail_, std::move(stage));
}

}  // namespace remove_eval
