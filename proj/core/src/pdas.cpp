#include "pumdd/pdas.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace pumdd {

IndexSet predict_active(std::span<const double> y, std::span<const double> multiplier,
                        std::span<const double> psi, double c) {
  if (y.size() != psi.size() || multiplier.size() != psi.size()) {
    throw std::invalid_argument("predict_active: vector lengths differ");
  }
  if (!(c > 0.0)) throw std::invalid_argument("predict_active: c must be positive");
  IndexSet out;
  for (std::size_t p = 0; p < y.size(); ++p) {
    if (multiplier[p] + c * (y[p] - psi[p]) > 0.0) out.push_back(static_cast<int>(p));
  }
  return out;
}

IndexSet complement(const IndexSet& active, std::size_t n) {
  IndexSet out;
  out.reserve(n - std::min(n, active.size()));
  std::size_t k = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (k < active.size() && static_cast<std::size_t>(active[k]) == p) {
      ++k;
      continue;
    }
    out.push_back(static_cast<int>(p));
  }
  return out;
}

ReducedSystem reduced_system(const SparseMatrix& a, std::span<const double> b,
                             std::span<const double> psi, const IndexSet& active) {
  const std::size_t n = a.rows();
  if (b.size() != n || psi.size() != n) {
    throw std::invalid_argument("reduced_system: vector lengths differ from the matrix");
  }
  std::vector<char> is_active(n, 0);
  for (const int p : active) {
    if (p < 0 || static_cast<std::size_t>(p) >= n) {
      throw std::out_of_range("reduced_system: active index out of range");
    }
    is_active[static_cast<std::size_t>(p)] = 1;
  }
  ReducedSystem out;
  out.inactive = complement(active, n);
  out.matrix = a.principal_submatrix(out.inactive);
  out.rhs.reserve(out.inactive.size());
  for (const int p : out.inactive) {
    const auto i = static_cast<std::size_t>(p);
    double v = b[i];
    const auto c = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const auto j = static_cast<std::size_t>(c[k]);
      if (is_active[j]) v -= vals[k] * psi[j];
    }
    out.rhs.push_back(v);
  }
  return out;
}

std::vector<double> multiplier_update(const SparseMatrix& a, std::span<const double> b,
                                      std::span<const double> y, const IndexSet& active) {
  std::vector<double> out(a.rows(), 0.0);
  for (const int p : active) {
    const auto i = static_cast<std::size_t>(p);
    double ay = 0.0;
    const auto c = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) ay += vals[k] * y[static_cast<std::size_t>(c[k])];
    out[i] = b[i] - ay;
  }
  return out;
}

PdasResult pdas_solve(const SparseMatrix& a, std::span<const double> b,
                      std::span<const double> psi, const PdasOptions& options,
                      const ActiveState& initial, const InnerSolverConfig& inner,
                      std::ostream* trace) {
  const std::size_t n = a.rows();
  if (b.size() != n || psi.size() != n || initial.y.size() != n ||
      initial.multiplier.size() != n) {
    throw std::invalid_argument("pdas_solve: vector lengths differ from the matrix");
  }
  PdasResult out;
  out.state = initial;
  IndexSet active = predict_active(out.state.y, out.state.multiplier, psi, options.c);

  for (std::size_t k = 0; k < options.max_iterations; ++k) {
    const ReducedSystem sys = reduced_system(a, b, psi, active);
    const SparseMatrix& m = sys.matrix;
    std::vector<double> guess(sys.inactive.size());
    for (std::size_t i = 0; i < guess.size(); ++i) {
      guess[i] = out.state.y[static_cast<std::size_t>(sys.inactive[i])];
    }
    LinearOperator apply_a = [&m](std::span<const double> x, std::span<double> y) {
      m.multiply(x, y);
    };
    LinearOperator precond;
    if (inner.preconditioner && !sys.inactive.empty()) {
      precond = inner.preconditioner(m, sys.inactive);
    }
    const PcgResult solve = pcg(apply_a, sys.rhs, precond, guess, inner.pcg);

    std::vector<double> y(n);
    for (const int p : active) y[static_cast<std::size_t>(p)] = psi[static_cast<std::size_t>(p)];
    for (std::size_t i = 0; i < sys.inactive.size(); ++i) {
      y[static_cast<std::size_t>(sys.inactive[i])] = solve.x[i];
    }
    out.state.y = std::move(y);
    out.state.multiplier = multiplier_update(a, b, out.state.y, active);
    out.state.active = active;
    out.solves.push_back(solve.report);
    out.active_sizes.push_back(active.size());
    out.iterations = k + 1;

    if (trace) {
      *trace << "pdas iter=" << (k + 1) << " active=" << active.size()
             << " dimension=" << solve.report.dimension
             << " inner_iterations=" << solve.report.iterations
             << " kappa=" << solve.report.condition_estimate
             << " converged=" << (solve.report.converged ? 1 : 0) << '\n';
    }
    if (!solve.report.converged) {
      out.inner_failure = true;
      return out;
    }
    IndexSet next = predict_active(out.state.y, out.state.multiplier, psi, options.c);
    if (next == active) {
      out.converged = true;
      return out;
    }
    active = std::move(next);
  }
  if (trace) {
    *trace << "pdas: no active-set repetition within " << options.max_iterations
           << " iterations; last active set size " << active.size() << '\n';
  }
  return out;
}

KktResidual kkt_residual(const SparseMatrix& a, std::span<const double> b,
                         std::span<const double> psi, std::span<const double> y,
                         std::span<const double> multiplier) {
  const std::vector<double> ay = a.multiply(y);
  KktResidual r;
  for (std::size_t p = 0; p < y.size(); ++p) {
    r.stationarity = std::max(r.stationarity, std::abs(b[p] - ay[p] - multiplier[p]));
    r.dual_infeasibility = std::max(r.dual_infeasibility, -multiplier[p]);
    r.primal_infeasibility = std::max(r.primal_infeasibility, y[p] - psi[p]);
    r.complementarity = std::max(r.complementarity, std::abs(multiplier[p] * (y[p] - psi[p])));
  }
  return r;
}

}  // namespace pumdd
