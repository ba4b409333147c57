#include "pumdd/krylov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace pumdd {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Number of eigenvalues of T strictly less than x (Sturm count on the LDL^T
// pivots).
std::size_t sturm_count(std::span<const double> d, std::span<const double> e, double x) {
  std::size_t count = 0;
  double q = d[0] - x;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (q == 0.0) q = 1e-300;
    q = d[i] - x - e[i - 1] * e[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

double bisect_eigenvalue(std::span<const double> d, std::span<const double> e, std::size_t k,
                         double lo, double hi) {
  // k-th smallest eigenvalue (0-based).
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(d, e, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

EigenRange tridiagonal_extreme_eigenvalues(std::span<const double> diagonal,
                                           std::span<const double> off_diagonal) {
  if (diagonal.empty()) throw std::invalid_argument("tridiagonal: empty matrix");
  if (off_diagonal.size() + 1 < diagonal.size()) {
    throw std::invalid_argument("tridiagonal: off-diagonal too short");
  }
  const auto e = off_diagonal.first(diagonal.size() - 1);
  double lo = diagonal[0];
  double hi = diagonal[0];
  for (std::size_t i = 0; i < diagonal.size(); ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(e[i - 1]);
    if (i + 1 < diagonal.size()) r += std::abs(e[i]);
    lo = std::min(lo, diagonal[i] - r);
    hi = std::max(hi, diagonal[i] + r);
  }
  const double pad = 1e-14 * std::max(std::abs(lo), std::abs(hi)) + 1e-300;
  lo -= pad;
  hi += pad;
  return {bisect_eigenvalue(diagonal, e, 0, lo, hi),
          bisect_eigenvalue(diagonal, e, diagonal.size() - 1, lo, hi)};
}

double lanczos_condition(std::span<const double> alphas, std::span<const double> betas) {
  if (alphas.empty()) throw std::invalid_argument("lanczos_condition: no CG steps");
  const std::size_t k = alphas.size();
  if (betas.size() + 1 < k) throw std::invalid_argument("lanczos_condition: betas too short");
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::isfinite(alphas[i]) || !(alphas[i] > 0.0)) {
      throw std::invalid_argument("lanczos_condition: non-finite or non-positive step length");
    }
  }
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (!std::isfinite(betas[i]) || betas[i] < 0.0) {
      throw std::invalid_argument("lanczos_condition: non-finite direction ratio");
    }
  }
  if (k == 1) return 1.0;
  std::vector<double> d(k);
  std::vector<double> e(k - 1);
  d[0] = 1.0 / alphas[0];
  for (std::size_t i = 1; i < k; ++i) d[i] = 1.0 / alphas[i] + betas[i - 1] / alphas[i - 1];
  for (std::size_t i = 0; i + 1 < k; ++i) e[i] = std::sqrt(betas[i]) / alphas[i];
  const EigenRange range = tridiagonal_extreme_eigenvalues(d, e);
  if (!(range.min > 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(1.0, range.max / range.min);
}

PcgResult pcg(const LinearOperator& a, std::span<const double> b,
              const LinearOperator& preconditioner, std::span<const double> x0,
              const PcgOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  if (!x0.empty() && x0.size() != n) throw std::invalid_argument("pcg: x0 has wrong length");
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("pcg: tolerance must be positive");
  const std::size_t max_iter = options.max_iterations > 0 ? options.max_iterations : 20 * n;

  PcgResult out;
  out.report.dimension = n;
  out.x.assign(n, 0.0);
  const double b_norm = norm2(b);
  auto finish = [&]() {
    out.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.report.condition_estimate =
        out.alphas.empty() ? 1.0 : lanczos_condition(out.alphas, out.betas);
    return out;
  };
  if (n == 0 || b_norm == 0.0) {
    out.report.converged = true;
    return finish();
  }

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> work(n);
  if (!x0.empty()) {
    std::copy(x0.begin(), x0.end(), out.x.begin());
    a(out.x, work);
    for (std::size_t i = 0; i < n; ++i) r[i] -= work[i];
  }
  std::vector<double> z(n);
  auto apply_b = [&](std::span<const double> in, std::span<double> res) {
    if (preconditioner) {
      preconditioner(in, res);
    } else {
      std::copy(in.begin(), in.end(), res.begin());
    }
  };
  apply_b(r, z);
  double rz = dot(r, z);
  const double threshold = options.tolerance * b_norm;
  double z_norm = norm2(z);
  out.report.residual_norm = z_norm;
  if (z_norm <= threshold) {
    out.report.converged = true;
    return finish();
  }
  if (!(rz > 0.0)) throw IndefiniteOperatorError("pcg: preconditioner is not positive definite");

  std::vector<double> p = z;
  std::vector<double> ap(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    a(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      throw IndefiniteOperatorError("pcg: operator is not positive definite (p^T A p = " +
                                    std::to_string(pap) + ")");
    }
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      out.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    out.alphas.push_back(alpha);
    ++out.report.iterations;
    apply_b(r, z);
    z_norm = norm2(z);
    out.report.residual_norm = z_norm;
    if (z_norm <= threshold) {
      out.report.converged = true;
      break;
    }
    const double rz_next = dot(r, z);
    if (!(rz_next > 0.0)) {
      throw IndefiniteOperatorError("pcg: preconditioner is not positive definite");
    }
    const double beta = rz_next / rz;
    out.betas.push_back(beta);
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return finish();
}

}  // namespace pumdd
