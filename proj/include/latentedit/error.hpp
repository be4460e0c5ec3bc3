#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace latentedit {

enum class ErrorCode {
  kShapeMismatch,
  kNonFinite,
  kInvalidArgument,
  // npy
  kNotNpy,
  kUnsupportedLayout,
  kPayloadLengthMismatch,
  kNarrowingOverflow,
  kEmptyArchive,
  kLimitExceeded,
  // mapper weight files
  kDimensionMismatch,
  kUnknownActivation,
  kTruncated,
  // toy benchmark
  kConstructionFailed,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Where in a grid or iteration an error was detected, when that is known.
struct ErrorLocation {
  std::optional<std::size_t> layer{};
  std::optional<std::size_t> channel{};
  std::optional<std::size_t> iteration{};
};

/// All library failures surface as this exception. `code()` is stable and
/// meant for programmatic handling; `what()` is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, ErrorLocation where = {});

  ErrorCode code() const noexcept { return code_; }
  const ErrorLocation& where() const noexcept { return where_; }

 private:
  ErrorCode code_;
  ErrorLocation where_;
};

}  // namespace latentedit
