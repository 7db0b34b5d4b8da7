#include "cellbench/error.hpp"

namespace cellbench {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::EmptyProfile: return "empty-profile error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Link: return "link error";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Unreachable: return "unreachable error";
    case ErrorKind::Bundle: return "bundle error";
    case ErrorKind::Cache: return "cache error";
    case ErrorKind::Template: return "template error";
    case ErrorKind::Credential: return "credential error";
    case ErrorKind::Transport: return "transport error";
    case ErrorKind::EmptyReply: return "empty-reply error";
    case ErrorKind::Standardization: return "standardization error";
    case ErrorKind::JudgeFormat: return "judge-format error";
    case ErrorKind::Aggregation: return "aggregation error";
    case ErrorKind::PartialTotal: return "partial-total error";
    case ErrorKind::UndefinedCorrelation: return "undefined-correlation error";
    case ErrorKind::Alignment: return "alignment error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::RunFailure: return "run-level failure";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace cellbench
