#include "moenet/error.hpp"

namespace moenet {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidSpec: return "invalid-spec";
    case Errc::InvalidArgument: return "invalid-argument";
    case Errc::CatalogEmpty: return "catalog-empty";
    case Errc::UnresolvedKernel: return "unresolved-kernel";
    case Errc::InvalidConfig: return "invalid-config";
    case Errc::InfeasibleConfig: return "infeasible-config";
    case Errc::ParseError: return "parse-error";
    case Errc::Usage: return "usage";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace moenet
