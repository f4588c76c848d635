#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssmean {

enum class ErrorKind {
  kInvalidParameter,
  kEmptyInput,
  kInsufficientData,
  kValidation,
  kDimensionMismatch,
  kSingularDesign,
  kSamplerFailure,
  kInvalidDesign,
  kParse,
  kHeaderMismatch,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// to an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace ssmean
