#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cellbench {

/// Failure categories surfaced by the library. The CLI maps them onto exit codes.
enum class ErrorKind {
  Parse,
  Schema,
  EmptyProfile,
  Domain,
  Link,
  Lookup,
  Unreachable,
  Bundle,
  Cache,
  Template,
  Credential,
  Transport,
  EmptyReply,
  Standardization,
  JudgeFormat,
  Aggregation,
  PartialTotal,
  UndefinedCorrelation,
  Alignment,
  Config,
  Io,
  RunFailure,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cellbench
