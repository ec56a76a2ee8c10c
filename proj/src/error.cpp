#include "qdgate/error.hpp"

namespace qdgate {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParameterDomain: return "parameter-domain";
    case ErrorKind::OracleUnconverged: return "oracle-unconverged";
    case ErrorKind::Consistency: return "consistency";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::IdentificationFailed: return "identification-failed";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Commensurability: return "commensurability";
    case ErrorKind::Stiffness: return "stiffness";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Config: return "config";
    case ErrorKind::Ordering: return "ordering";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {
std::string compose(ErrorKind kind, const std::string& message, const std::string& stage) {
  std::string out;
  if (!stage.empty()) out += "[" + stage + "] ";
  out += std::string(to_string(kind)) + " error: " + message;
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::string stage)
    : std::runtime_error(compose(kind, message, stage)),
      kind_(kind),
      stage_(std::move(stage)),
      detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace qdgate
