#include "knock/error.hpp"

namespace knock {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Format: return "format";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Range: return "range";
    case ErrorKind::InsufficientData: return "insufficient-data";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Format: return 3;
    default: return 4;
  }
}

}  // namespace knock
