#pragma once

#include <stdexcept>
#include <string>

namespace riplab {

/// Bad input: dimension mismatch, malformed file, invalid configuration.
/// The CLI maps this family to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// XX^T - ZZ^T vanished, so the error vector e is zero and every quantity
/// built on e/||e|| is undefined.
class ZeroErrorVector : public ValidationError {
 public:
  explicit ZeroErrorVector(const std::string& what) : ValidationError(what) {}
};

/// sigma_min(X) = 0 makes beta and the cos-theta subproblem degenerate;
/// callers should dispatch to the trivial bound delta = 1 instead.
class DegenerateBeta : public ValidationError {
 public:
  explicit DegenerateBeta(const std::string& what) : ValidationError(what) {}
};

/// The interior-point solver hit its iteration cap before certifying the
/// requested gap. Carries the last iterate's residuals in the message.
/// The CLI maps this to exit code 3.
class SolverStall : public std::runtime_error {
 public:
  explicit SolverStall(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace riplab
