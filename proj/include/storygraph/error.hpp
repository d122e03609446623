#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace storygraph {

enum class ErrorCode {
  FileNotFound,
  MalformedHeader,
  EmptyDataset,
  InvalidStoryPoint,
  TaggerFailure,
  DatasetTooSmall,
  DimensionMismatch,
  EmptyTrainingSet,
  EmptyDocument,
  IndexOutOfRange,
  NonFiniteActivation,
  InvalidLabel,
  TraceMismatch,
  UnknownClassIndex,
  VersionMismatch,
  CorruptFile,
  EmptyCorpus,
  DegenerateData,
  IoFailure,
  InvalidArgument,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the named codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace storygraph
