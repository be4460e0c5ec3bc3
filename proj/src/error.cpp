#include "latentedit/error.hpp"

namespace latentedit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kNotNpy: return "not an NPY file";
    case ErrorCode::kUnsupportedLayout: return "unsupported layout";
    case ErrorCode::kPayloadLengthMismatch: return "payload length mismatch";
    case ErrorCode::kNarrowingOverflow: return "narrowing overflow";
    case ErrorCode::kEmptyArchive: return "empty archive";
    case ErrorCode::kLimitExceeded: return "limit exceeded";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kUnknownActivation: return "unknown activation";
    case ErrorCode::kTruncated: return "truncated input";
    case ErrorCode::kConstructionFailed: return "construction failed";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     const ErrorLocation& where) {
  std::string out(to_string(code));
  if (!message.empty()) {
    out += ": ";
    out += message;
  }
  if (where.iteration) out += " [iteration " + std::to_string(*where.iteration) + "]";
  if (where.layer) out += " [layer " + std::to_string(*where.layer) + "]";
  if (where.channel) out += " [channel " + std::to_string(*where.channel) + "]";
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, ErrorLocation where)
    : std::runtime_error(decorate(code, message, where)),
      code_(code),
      where_(where) {}

}  // namespace latentedit
