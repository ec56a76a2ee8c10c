#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qdgate {

enum class ErrorKind {
  ParameterDomain,
  OracleUnconverged,
  Consistency,
  Numerical,
  IdentificationFailed,
  Resolution,
  Commensurability,
  Stiffness,
  Domain,
  Config,
  Ordering,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind; the pipeline adds a
/// stage tag when it rethrows.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string stage_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace qdgate
