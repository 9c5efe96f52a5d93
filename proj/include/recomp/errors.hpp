#pragma once

#include <stdexcept>
#include <string>

namespace recomp {

// Root of the library's error hierarchy. Everything thrown on bad input or a
// violated contract derives from this; internal bugs surface as
// InvariantViolation.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UndefinedVariable : Error { using Error::Error; };
struct NotAContext : Error { using Error::Error; };
struct ArityTooLarge : Error { using Error::Error; };
struct NoConstant : Error { using Error::Error; };
struct NotASolution : Error { using Error::Error; };
struct InconsistentGuess : Error { using Error::Error; };
struct ExponentOverCap : Error { using Error::Error; };
struct HolePositionOutOfRange : Error { using Error::Error; };
struct UnknownLetter : Error { using Error::Error; };
struct ArityMismatch : Error { using Error::Error; };
struct DuplicateName : Error { using Error::Error; };
struct PreconditionViolated : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };

struct SyntaxError : Error {
  int line = 0;
  int col = 0;
  SyntaxError(const std::string& what, int line_, int col_)
      : Error(what + " (line " + std::to_string(line_) + ", col " +
              std::to_string(col_) + ")"),
        line(line_),
        col(col_) {}
};

}  // namespace recomp
