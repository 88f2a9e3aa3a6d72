#pragma once

#include <stdexcept>
#include <string>

namespace synctool {

// Broad failure class. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kDimension,     // shapes do not line up
  kContract,      // caller violated a documented precondition
  kPrecondition,  // graph-set membership or scenario validity
  kSynthesis,     // a design step could not be completed
  kUnsupported,   // input lies outside the supported construction class
  kNumerical,     // no solution / infinite norm / ambiguous rank decision
};

// Every error carries a short machine-readable code (e.g. "NO_SPANNING_TREE")
// next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error dimension_error(const std::string& what) {
  return Error(ErrorKind::kDimension, "DIMENSION_MISMATCH", what);
}

inline Error contract_error(const std::string& what) {
  return Error(ErrorKind::kContract, "CONTRACT_VIOLATION", what);
}

}  // namespace synctool
