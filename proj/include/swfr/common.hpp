#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace swfr {

// Row-major throughout; file formats and the C API expose raw row-major
// double buffers.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class ErrorCode {
  invalid_argument = 1,
  shape_mismatch = 2,
  non_finite = 3,
  io = 4,
  config = 5,
  numeric = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

}  // namespace swfr
