#ifndef RAMAT_ERROR_HPP
#define RAMAT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ramat {

enum class ErrorKind {
  kConfig,     // invalid configuration or incompatible checkpoint
  kData,       // unreadable or ill-formed input data
  kNumeric,    // non-finite values, failed convergence
  kDimension,  // shape mismatch between operands
  kContract,   // API misuse (non-scalar loss, empty mask, ...)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& msg) {
  return Error(ErrorKind::kConfig, "config error: " + msg);
}
inline Error data_error(const std::string& msg) {
  return Error(ErrorKind::kData, "data error: " + msg);
}
inline Error numeric_error(const std::string& msg) {
  return Error(ErrorKind::kNumeric, "numeric failure: " + msg);
}
inline Error dimension_error(const std::string& msg) {
  return Error(ErrorKind::kDimension, "dimension error: " + msg);
}
inline Error contract_error(const std::string& msg) {
  return Error(ErrorKind::kContract, "contract error: " + msg);
}

/// Process exit code for an error kind: 2 config, 3 data, 4 numeric.
int exit_code(ErrorKind kind);

}  // namespace ramat

#endif  // RAMAT_ERROR_HPP
