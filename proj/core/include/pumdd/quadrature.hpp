#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pumdd/pum_space.hpp"

namespace pumdd {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int order);

/// Points and weights of a 1-D rule mapped onto one cell.
struct AxisCellRule {
  Interval cell;
  std::vector<double> points;
  std::vector<double> weights;
};

/// Tensor-product quadrature on axis-aligned cells whose edges contain every
/// flat-top and ramp breakpoint of a PatchGrid, so the integrand is a
/// polynomial on each cell.
class QuadratureMesh {
 public:
  QuadratureMesh(std::vector<double> breaks_x1, std::vector<double> breaks_x2, int order);

  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] std::span<const double> breaks(int axis) const { return breaks_[axis]; }
  [[nodiscard]] std::size_t cell_count(int axis) const { return breaks_[axis].size() - 1; }
  [[nodiscard]] std::size_t cell_count() const { return cell_count(0) * cell_count(1); }
  [[nodiscard]] AxisCellRule axis_rule(int axis, std::size_t cell) const;

  /// Sum of w * g(x) over all quadrature points.
  [[nodiscard]] double integrate(const std::function<double(Point)>& g) const;
  [[nodiscard]] double total_weight() const;

  /// Same cells, every cell split into `factor` x `factor` pieces.
  [[nodiscard]] QuadratureMesh refined(int factor, int order) const;

 private:
  std::vector<double> breaks_[2];
  int order_;
  GaussRule rule_;
};

/// Default order: 6 points per axis per cell, exact for the degree-10
/// products arising on ramp cells.
inline constexpr int kDefaultQuadratureOrder = 6;

QuadratureMesh build_quadrature(const PatchGrid& grid, int order = kDefaultQuadratureOrder);

}  // namespace pumdd
