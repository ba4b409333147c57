#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace pumdd {

/// y = Op(x). Both spans have the operator's dimension.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

/// Raised when CG detects a non-positive curvature p^T A p or r^T B r.
class IndefiniteOperatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveReport {
  std::size_t dimension = 0;
  std::size_t iterations = 0;
  /// lambda_max / lambda_min of the Lanczos tridiagonal; 1 when no
  /// iteration was needed.
  double condition_estimate = 1.0;
  /// ||B r||_2 at exit (the recursively updated residual).
  double residual_norm = 0.0;
  double seconds = 0.0;
  bool converged = false;
};

struct PcgOptions {
  double tolerance = 1e-15;
  /// 0 selects 20 x dimension.
  std::size_t max_iterations = 0;
};

struct PcgResult {
  std::vector<double> x;
  SolveReport report;
  std::vector<double> alphas;
  std::vector<double> betas;
};

/// Preconditioned conjugate gradients. Stops when ||B r||_2 <= tol ||b||_2;
/// an empty `preconditioner` means B = I. `x0` may be empty (zero guess).
PcgResult pcg(const LinearOperator& a, std::span<const double> b,
              const LinearOperator& preconditioner, std::span<const double> x0,
              const PcgOptions& options = {});

/// Condition number of the symmetric tridiagonal Lanczos matrix rebuilt
/// from CG step lengths (alphas, length k) and direction-update ratios
/// (betas, length k - 1 or k; extra entries are ignored).
double lanczos_condition(std::span<const double> alphas, std::span<const double> betas);

/// Extreme eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.
struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};
EigenRange tridiagonal_extreme_eigenvalues(std::span<const double> diagonal,
                                           std::span<const double> off_diagonal);

}  // namespace pumdd
