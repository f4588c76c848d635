#include "ssmean/error.hpp"

namespace ssmean {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "InvalidParameter";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kSingularDesign: return "SingularDesign";
    case ErrorKind::kSamplerFailure: return "SamplerFailure";
    case ErrorKind::kInvalidDesign: return "InvalidDesign";
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kHeaderMismatch: return "HeaderMismatch";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace ssmean
