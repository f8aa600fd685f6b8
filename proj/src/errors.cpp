#include "soilrem/errors.hpp"

namespace soilrem {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDomain: return "domain error";
    case ErrorCode::kRange: return "range error";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kInstability: return "integration instability";
    case ErrorCode::kIllConditioned: return "ill-conditioned update";
    case ErrorCode::kUnobservable: return "unobservable configuration";
    case ErrorCode::kState: return "state error";
    case ErrorCode::kIo: return "I/O error";
  }
  return "unknown error";
}

}  // namespace soilrem
