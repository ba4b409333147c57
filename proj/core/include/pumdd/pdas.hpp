#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pumdd/krylov.hpp"
#include "pumdd/sparse_matrix.hpp"

namespace pumdd {

/// Ascending list of node indices.
using IndexSet = std::vector<int>;

/// Iterate (y_k, lambda_k) of the primal-dual active set method together
/// with the active set it was computed on.
struct ActiveState {
  std::vector<double> y;
  std::vector<double> multiplier;
  IndexSet active;

  static ActiveState zero(std::size_t n) {
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), {}};
  }
};

/// { p : lambda[p] + c (y[p] - psi[p]) > 0 }, strict inequality, no tolerance.
IndexSet predict_active(std::span<const double> y, std::span<const double> multiplier,
                        std::span<const double> psi, double c);

/// Complement of `active` in 0..n-1.
IndexSet complement(const IndexSet& active, std::size_t n);

struct ReducedSystem {
  SparseMatrix matrix;
  std::vector<double> rhs;
  IndexSet inactive;
};

/// A restricted to inactive x inactive and b_I - A_IA psi_A.
ReducedSystem reduced_system(const SparseMatrix& a, std::span<const double> b,
                             std::span<const double> psi, const IndexSet& active);

/// lambda[p] = b[p] - (A y)[p] on the active set, 0 elsewhere.
std::vector<double> multiplier_update(const SparseMatrix& a, std::span<const double> b,
                                      std::span<const double> y, const IndexSet& active);

/// Builds B for the reduced operator restricted to the given inactive nodes.
/// An empty LinearOperator means no preconditioning.
using PreconditionerFactory =
    std::function<LinearOperator(const SparseMatrix& reduced, const IndexSet& inactive)>;

struct InnerSolverConfig {
  PreconditionerFactory preconditioner;
  PcgOptions pcg;
};

struct PdasOptions {
  double c = 1e8;
  std::size_t max_iterations = 100;
};

struct PdasResult {
  ActiveState state;
  /// One report per linear solve, in iteration order.
  std::vector<SolveReport> solves;
  std::vector<std::size_t> active_sizes;
  std::size_t iterations = 0;
  bool converged = false;
  /// The loop stopped because an inner PCG solve hit its iteration cap.
  bool inner_failure = false;
};

/// Primal-dual active set loop. Each step predicts the active set from the
/// current iterate, solves the reduced system by PCG, recovers the
/// multiplier, and stops once the predicted set repeats. `trace`, when given,
/// receives one line per iteration.
PdasResult pdas_solve(const SparseMatrix& a, std::span<const double> b,
                      std::span<const double> psi, const PdasOptions& options,
                      const ActiveState& initial, const InnerSolverConfig& inner,
                      std::ostream* trace = nullptr);

struct KktResidual {
  double stationarity = 0.0;     // max |b - A y - lambda|
  double dual_infeasibility = 0.0;   // max(0, -min lambda)
  double primal_infeasibility = 0.0;  // max(0, max(y - psi))
  double complementarity = 0.0;  // max |lambda (y - psi)|
};

KktResidual kkt_residual(const SparseMatrix& a, std::span<const double> b,
                         std::span<const double> psi, std::span<const double> y,
                         std::span<const double> multiplier);

}  // namespace pumdd
