#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace moenet {

enum class Errc {
  InvalidSpec,
  InvalidArgument,
  CatalogEmpty,
  UnresolvedKernel,
  InvalidConfig,
  InfeasibleConfig,
  ParseError,
  Usage,
};

std::string_view to_string(Errc code);

// All model errors are reported through this one exception type; callers
// switch on code() when they need to map errors to exit codes.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace moenet
