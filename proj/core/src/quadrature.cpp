#include "pumdd/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pumdd {

GaussRule gauss_legendre(int order) {
  if (order < 1 || order > 64) {
    throw std::invalid_argument("gauss_legendre: order must be in [1, 64]");
  }
  GaussRule rule;
  rule.points.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int n = order;
  // Newton iteration on P_n from the Chebyshev-like initial guess; roots are
  // symmetric so only half of them are computed.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) {
      x = 0.0;
      dp = 1.0;
    } else {
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[static_cast<std::size_t>(i)] = -x;
    rule.points[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.points[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

QuadratureMesh::QuadratureMesh(std::vector<double> breaks_x1, std::vector<double> breaks_x2,
                               int order)
    : breaks_{std::move(breaks_x1), std::move(breaks_x2)}, order_(order),
      rule_(gauss_legendre(order)) {
  for (const auto& b : breaks_) {
    if (b.size() < 2) throw std::invalid_argument("QuadratureMesh: need at least one cell");
    for (std::size_t i = 1; i < b.size(); ++i) {
      if (!(b[i] > b[i - 1])) {
        throw std::invalid_argument("QuadratureMesh: breakpoints must increase strictly");
      }
    }
  }
}

AxisCellRule QuadratureMesh::axis_rule(int axis, std::size_t cell) const {
  const auto& b = breaks_[axis];
  AxisCellRule out;
  out.cell = {b.at(cell), b.at(cell + 1)};
  const double mid = 0.5 * (out.cell.lower + out.cell.upper);
  const double half = 0.5 * out.cell.width();
  out.points.reserve(rule_.points.size());
  out.weights.reserve(rule_.points.size());
  for (std::size_t q = 0; q < rule_.points.size(); ++q) {
    out.points.push_back(mid + half * rule_.points[q]);
    out.weights.push_back(half * rule_.weights[q]);
  }
  return out;
}

double QuadratureMesh::integrate(const std::function<double(Point)>& g) const {
  double total = 0.0;
  for (std::size_t cy = 0; cy < cell_count(1); ++cy) {
    const AxisCellRule ry = axis_rule(1, cy);
    for (std::size_t cx = 0; cx < cell_count(0); ++cx) {
      const AxisCellRule rx = axis_rule(0, cx);
      double cell_sum = 0.0;
      for (std::size_t qy = 0; qy < ry.points.size(); ++qy) {
        for (std::size_t qx = 0; qx < rx.points.size(); ++qx) {
          cell_sum += rx.weights[qx] * ry.weights[qy] * g({rx.points[qx], ry.points[qy]});
        }
      }
      total += cell_sum;
    }
  }
  return total;
}

double QuadratureMesh::total_weight() const {
  return integrate([](Point) { return 1.0; });
}

QuadratureMesh QuadratureMesh::refined(int factor, int order) const {
  if (factor < 1) throw std::invalid_argument("QuadratureMesh::refined: factor must be >= 1");
  std::vector<double> out[2];
  for (int axis = 0; axis < 2; ++axis) {
    const auto& b = breaks_[axis];
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
      for (int k = 0; k < factor; ++k) {
        out[axis].push_back(b[i] + (b[i + 1] - b[i]) * k / factor);
      }
    }
    out[axis].push_back(b.back());
  }
  return QuadratureMesh(std::move(out[0]), std::move(out[1]), order);
}

QuadratureMesh build_quadrature(const PatchGrid& grid, int order) {
  if (order < 1) {
    throw std::invalid_argument("build_quadrature: order must be positive, got " +
                                std::to_string(order));
  }
  return QuadratureMesh(grid.breakpoints(0), grid.breakpoints(1), order);
}

}  // namespace pumdd
