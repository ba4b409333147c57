#pragma once

// Flat-top partition-of-unity approximation space on a rectangle.
//
// Each axis carries 3n uniformly spaced nodes (n = 2^level patches), both
// domain endpoints included. Patch i owns axis nodes 3i, 3i+1, 3i+2; its
// partition-of-unity factor equals 1 on [t(3i), t(3i+2)] and ramps with the
// cubic s(t) = 3t^2 - 2t^3 across the one-spacing gaps to its neighbours.
// A global basis function is the product of the patch's 2-D partition of
// unity with a biquadratic Lagrange polynomial on the patch's 3x3 nodes.
// Nodes on the boundary are dropped, which enforces the Dirichlet condition
// and leaves (3n - 2)^2 interior nodes with the Kronecker delta property.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pumdd {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  [[nodiscard]] double width() const { return upper - lower; }
  [[nodiscard]] bool contains(double t) const { return t >= lower && t <= upper; }
};

/// Axis-aligned rectangle with positive side lengths.
class Domain {
 public:
  Domain(Point lower, Point upper);

  /// (-0.5, 0.5)^2
  static Domain centered_unit_square();

  [[nodiscard]] Point lower() const { return lower_; }
  [[nodiscard]] Point upper() const { return upper_; }
  [[nodiscard]] Interval axis(int axis) const;
  [[nodiscard]] double side(int axis) const { return axis_interval(axis).width(); }
  [[nodiscard]] double area() const { return side(0) * side(1); }
  [[nodiscard]] bool contains(Point x, double slack = 0.0) const;

 private:
  [[nodiscard]] Interval axis_interval(int axis) const;

  Point lower_;
  Point upper_;
};

/// Value and first two derivatives of a univariate function.
struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline Jet operator*(const Jet& a, const Jet& b) {
  return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
          a.d2 * b.value + 2.0 * a.d1 * b.d1 + a.value * b.d2};
}

struct PuValue {
  double value = 0.0;
  std::array<double, 2> gradient{};
  // Hessian entries (xx, xy, yy).
  std::array<double, 3> hessian{};
};

struct BasisValue {
  double value = 0.0;
  std::array<double, 2> gradient{};
  double laplacian = 0.0;
};

using NodeIndex = std::size_t;

/// One axis-local factor of a basis function: the owning patch along that
/// axis and the local Lagrange index 0..2 within it.
struct AxisFactor {
  int patch = 0;
  int local = 0;
  int axis_node = 0;  // global axis node index in [1, 3n - 2]
};

class PatchGrid {
 public:
  PatchGrid(int level, Domain domain);

  [[nodiscard]] int level() const { return level_; }
  [[nodiscard]] const Domain& domain() const { return domain_; }
  [[nodiscard]] int patches_per_axis() const { return patches_; }
  [[nodiscard]] int patch_count() const { return patches_ * patches_; }
  /// 3n, boundary nodes included.
  [[nodiscard]] int axis_node_count() const { return 3 * patches_; }
  /// 3n - 2.
  [[nodiscard]] int interior_per_axis() const { return 3 * patches_ - 2; }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  [[nodiscard]] double spacing(int axis) const;
  /// Coordinate of axis node k in [0, 3n).
  [[nodiscard]] double axis_coordinate(int axis, int k) const;

  [[nodiscard]] std::span<const Point> nodes() const { return nodes_; }
  [[nodiscard]] Point node(NodeIndex p) const { return nodes_.at(p); }
  /// Row-major (x2 slow, x1 fast) index of the node at interior axis
  /// positions (j1, j2), each in [0, 3n - 2).
  [[nodiscard]] NodeIndex node_index(int j1, int j2) const {
    return static_cast<NodeIndex>(j2) * static_cast<NodeIndex>(interior_per_axis()) +
           static_cast<NodeIndex>(j1);
  }
  [[nodiscard]] std::array<AxisFactor, 2> factors(NodeIndex p) const;
  /// Patch index i = i2 * n + i1 owning node p.
  [[nodiscard]] int patch_of(NodeIndex p) const;

  [[nodiscard]] Interval flat_top(int axis, int patch) const;
  /// Ramp between patch g and g + 1.
  [[nodiscard]] Interval ramp(int axis, int gap) const;
  /// Support of the 1-D partition-of-unity factor of a patch.
  [[nodiscard]] Interval support(int axis, int patch) const;
  /// Sorted flat-top and ramp endpoints, domain ends included (2n values).
  [[nodiscard]] std::vector<double> breakpoints(int axis) const;
  /// Patches whose 1-D support contains t (at most two).
  [[nodiscard]] std::vector<int> patches_covering(int axis, double t) const;

  /// 1-D partition-of-unity factor of `patch` along `axis`.
  [[nodiscard]] Jet pu_axis(int axis, int patch, double t) const;
  /// Quadratic Lagrange polynomial for local node `local` of `patch`.
  [[nodiscard]] Jet lagrange_axis(int axis, int patch, int local, double t) const;
  /// Product of the two above.
  [[nodiscard]] Jet basis_axis(int axis, int patch, int local, double t) const;

 private:
  int level_;
  int patches_;
  Domain domain_;
  std::vector<Point> nodes_;
};

PatchGrid build_patch_grid(int level, const Domain& domain);

/// Cubic Hermite ramp 3t^2 - 2t^3 on [0, 1], clamped outside.
Jet cubic_ramp(double t);

/// 2-D partition-of-unity function of patch i = i2 * n + i1. Zero outside
/// its support.
PuValue evaluate_pu(const PatchGrid& grid, int patch, Point x);

/// Basis function of interior node p. Throws std::out_of_range for an
/// unknown node.
BasisValue evaluate_basis(const PatchGrid& grid, NodeIndex p, Point x);

/// Value, gradient and Laplacian of sum_p coefficients[p] * b_p at x.
BasisValue evaluate_expansion(const PatchGrid& grid, std::span<const double> coefficients,
                              Point x);

/// Nodal interpolation of a pointwise-evaluable source. Throws
/// std::domain_error when the source is not finite at some node.
std::vector<double> interpolate(const PatchGrid& fine, const std::function<double(Point)>& source);

/// Nodal interpolation of a coefficient vector living on another PUM grid
/// over the same domain (typically a coarser level).
std::vector<double> interpolate(const PatchGrid& fine, const PatchGrid& source_grid,
                                std::span<const double> source_coefficients);

}  // namespace pumdd
