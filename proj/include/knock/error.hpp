#ifndef KNOCK_ERROR_HPP_
#define KNOCK_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace knock {

enum class ErrorKind {
  Usage,
  Format,
  Domain,
  Degenerate,
  Precondition,
  Range,
  InsufficientData,
};

std::string_view to_string(ErrorKind kind);

// Process exit status for a failure of this kind: 2 usage, 3 format,
// 4 numeric/degeneracy.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind Kind>
class KindedError : public Error {
 public:
  explicit KindedError(const std::string &what) : Error(Kind, what) {}
};

using UsageError = KindedError<ErrorKind::Usage>;
using FormatError = KindedError<ErrorKind::Format>;
using DomainError = KindedError<ErrorKind::Domain>;
using DegenerateError = KindedError<ErrorKind::Degenerate>;
using PreconditionError = KindedError<ErrorKind::Precondition>;
using RangeError = KindedError<ErrorKind::Range>;
using InsufficientDataError = KindedError<ErrorKind::InsufficientData>;

}  // namespace knock

#endif  // KNOCK_ERROR_HPP_
