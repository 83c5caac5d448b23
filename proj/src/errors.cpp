#include "fidmag/errors.hpp"

namespace fidmag {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kSingularity: return "singularity";
    case ErrorKind::kCalibration: return "calibration";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kConditioning: return "conditioning";
    case ErrorKind::kFilterDesign: return "filter_design";
    case ErrorKind::kEdge: return "edge";
    case ErrorKind::kUnwrap: return "unwrap";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fidmag
