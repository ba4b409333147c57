#include "pumdd/pum_space.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pumdd {

namespace {

// Arguments that land within a few ulps of a node are treated as that node,
// so the Kronecker delta property holds exactly in floating point.
double snap_to_integer(double u) {
  const double r = std::round(u);
  return std::abs(u - r) <= 1e-12 ? r : u;
}

}  // namespace

Domain::Domain(Point lower, Point upper) : lower_(lower), upper_(upper) {
  if (!(upper.x1 > lower.x1) || !(upper.x2 > lower.x2) || !std::isfinite(lower.x1) ||
      !std::isfinite(lower.x2) || !std::isfinite(upper.x1) || !std::isfinite(upper.x2)) {
    throw std::invalid_argument("Domain: corners must span a rectangle with positive sides");
  }
}

Domain Domain::centered_unit_square() { return Domain({-0.5, -0.5}, {0.5, 0.5}); }

Interval Domain::axis_interval(int axis) const {
  return axis == 0 ? Interval{lower_.x1, upper_.x1} : Interval{lower_.x2, upper_.x2};
}

Interval Domain::axis(int axis) const { return axis_interval(axis); }

bool Domain::contains(Point x, double slack) const {
  return x.x1 >= lower_.x1 - slack && x.x1 <= upper_.x1 + slack && x.x2 >= lower_.x2 - slack &&
         x.x2 <= upper_.x2 + slack;
}

PatchGrid::PatchGrid(int level, Domain domain)
    : level_(level), patches_(0), domain_(domain) {
  if (level < 1) {
    throw std::invalid_argument("PatchGrid: level must be >= 1, got " + std::to_string(level));
  }
  if (level > 20) {
    throw std::invalid_argument("PatchGrid: level " + std::to_string(level) + " is too large");
  }
  patches_ = 1 << level;
  const int m = interior_per_axis();
  nodes_.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
  for (int j2 = 0; j2 < m; ++j2) {
    for (int j1 = 0; j1 < m; ++j1) {
      nodes_.push_back({axis_coordinate(0, j1 + 1), axis_coordinate(1, j2 + 1)});
    }
  }
}

PatchGrid build_patch_grid(int level, const Domain& domain) { return PatchGrid(level, domain); }

double PatchGrid::spacing(int axis) const {
  return domain_.side(axis) / static_cast<double>(axis_node_count() - 1);
}

double PatchGrid::axis_coordinate(int axis, int k) const {
  const Interval range = domain_.axis(axis);
  if (k <= 0) return range.lower;
  if (k >= axis_node_count() - 1) return range.upper;
  return range.lower + static_cast<double>(k) * spacing(axis);
}

std::array<AxisFactor, 2> PatchGrid::factors(NodeIndex p) const {
  if (p >= nodes_.size()) {
    throw std::out_of_range("PatchGrid: node index " + std::to_string(p) + " out of range");
  }
  const auto m = static_cast<NodeIndex>(interior_per_axis());
  const int k1 = static_cast<int>(p % m) + 1;
  const int k2 = static_cast<int>(p / m) + 1;
  return {AxisFactor{k1 / 3, k1 % 3, k1}, AxisFactor{k2 / 3, k2 % 3, k2}};
}

int PatchGrid::patch_of(NodeIndex p) const {
  const auto f = factors(p);
  return f[1].patch * patches_ + f[0].patch;
}

Interval PatchGrid::flat_top(int axis, int patch) const {
  return {axis_coordinate(axis, 3 * patch), axis_coordinate(axis, 3 * patch + 2)};
}

Interval PatchGrid::ramp(int axis, int gap) const {
  return {axis_coordinate(axis, 3 * gap + 2), axis_coordinate(axis, 3 * gap + 3)};
}

Interval PatchGrid::support(int axis, int patch) const {
  return {axis_coordinate(axis, 3 * patch - 1), axis_coordinate(axis, 3 * patch + 3)};
}

std::vector<double> PatchGrid::breakpoints(int axis) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * patches_));
  for (int i = 0; i < patches_; ++i) {
    out.push_back(axis_coordinate(axis, 3 * i));
    out.push_back(axis_coordinate(axis, 3 * i + 2));
  }
  // The first flat-top starts at the lower end and the last one ends at the
  // upper end, so this list already begins and ends on the boundary.
  out.back() = domain_.axis(axis).upper;
  return out;
}

std::vector<int> PatchGrid::patches_covering(int axis, double t) const {
  const double xi = (t - domain_.axis(axis).lower) / spacing(axis);
  const int guess = static_cast<int>(std::floor(xi / 3.0));
  std::vector<int> out;
  for (int i = guess - 1; i <= guess + 1; ++i) {
    if (i < 0 || i >= patches_) continue;
    if (support(axis, i).contains(t)) out.push_back(i);
  }
  return out;
}

Jet cubic_ramp(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  return {t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t), 6.0 - 12.0 * t};
}

Jet PatchGrid::pu_axis(int axis, int patch, double t) const {
  const double h = spacing(axis);
  // Ramps are half-open [start, end); both neighbours use the same
  // convention, so the sum over patches is 1 with vanishing derivatives
  // everywhere, breakpoints included.
  if (patch > 0) {
    const double start = axis_coordinate(axis, 3 * patch - 1);
    const double end = axis_coordinate(axis, 3 * patch);
    if (t < start) return {};
    if (t < end) {
      const Jet r = cubic_ramp(snap_to_integer((t - start) / h));
      return {r.value, r.d1 / h, r.d2 / (h * h)};
    }
  }
  if (patch < patches_ - 1) {
    const double start = axis_coordinate(axis, 3 * patch + 2);
    const double end = axis_coordinate(axis, 3 * patch + 3);
    if (t >= end) return {};
    if (t >= start) {
      const Jet r = cubic_ramp(snap_to_integer((t - start) / h));
      return {1.0 - r.value, -r.d1 / h, -r.d2 / (h * h)};
    }
  }
  return {1.0, 0.0, 0.0};
}

Jet PatchGrid::lagrange_axis(int axis, int patch, int local, double t) const {
  const double h = spacing(axis);
  const double centre = axis_coordinate(axis, 3 * patch + 1);
  const double u = snap_to_integer((t - centre) / h);
  switch (local) {
    case 0:
      return {0.5 * u * (u - 1.0), (u - 0.5) / h, 1.0 / (h * h)};
    case 1:
      return {1.0 - u * u, -2.0 * u / h, -2.0 / (h * h)};
    case 2:
      return {0.5 * u * (u + 1.0), (u + 0.5) / h, 1.0 / (h * h)};
    default:
      throw std::out_of_range("lagrange_axis: local index must be 0, 1 or 2");
  }
}

Jet PatchGrid::basis_axis(int axis, int patch, int local, double t) const {
  const Jet phi = pu_axis(axis, patch, t);
  if (phi.value == 0.0 && phi.d1 == 0.0 && phi.d2 == 0.0) return {};
  return phi * lagrange_axis(axis, patch, local, t);
}

PuValue evaluate_pu(const PatchGrid& grid, int patch, Point x) {
  if (patch < 0 || patch >= grid.patch_count()) {
    throw std::out_of_range("evaluate_pu: patch index out of range");
  }
  const int n = grid.patches_per_axis();
  const Jet a = grid.pu_axis(0, patch % n, x.x1);
  const Jet b = grid.pu_axis(1, patch / n, x.x2);
  PuValue out;
  out.value = a.value * b.value;
  out.gradient = {a.d1 * b.value, a.value * b.d1};
  out.hessian = {a.d2 * b.value, a.d1 * b.d1, a.value * b.d2};
  return out;
}

BasisValue evaluate_basis(const PatchGrid& grid, NodeIndex p, Point x) {
  const auto f = grid.factors(p);
  const Jet a = grid.basis_axis(0, f[0].patch, f[0].local, x.x1);
  const Jet b = grid.basis_axis(1, f[1].patch, f[1].local, x.x2);
  return {a.value * b.value, {a.d1 * b.value, a.value * b.d1}, a.d2 * b.value + a.value * b.d2};
}

namespace {

struct AxisTerm {
  int interior = 0;  // axis node index minus one
  Jet jet;
};

std::vector<AxisTerm> axis_terms(const PatchGrid& grid, int axis, double t) {
  std::vector<AxisTerm> out;
  const int last = grid.axis_node_count() - 1;
  for (const int patch : grid.patches_covering(axis, t)) {
    const Jet phi = grid.pu_axis(axis, patch, t);
    if (phi.value == 0.0 && phi.d1 == 0.0 && phi.d2 == 0.0) continue;
    for (int local = 0; local < 3; ++local) {
      const int k = 3 * patch + local;
      if (k == 0 || k == last) continue;
      out.push_back({k - 1, phi * grid.lagrange_axis(axis, patch, local, t)});
    }
  }
  return out;
}

}  // namespace

BasisValue evaluate_expansion(const PatchGrid& grid, std::span<const double> coefficients,
                              Point x) {
  if (coefficients.size() != grid.node_count()) {
    throw std::invalid_argument("evaluate_expansion: coefficient vector has wrong length");
  }
  const auto xs = axis_terms(grid, 0, x.x1);
  const auto ys = axis_terms(grid, 1, x.x2);
  BasisValue out;
  for (const auto& ty : ys) {
    for (const auto& tx : xs) {
      const double c = coefficients[grid.node_index(tx.interior, ty.interior)];
      if (c == 0.0) continue;
      out.value += c * tx.jet.value * ty.jet.value;
      out.gradient[0] += c * tx.jet.d1 * ty.jet.value;
      out.gradient[1] += c * tx.jet.value * ty.jet.d1;
      out.laplacian += c * (tx.jet.d2 * ty.jet.value + tx.jet.value * ty.jet.d2);
    }
  }
  return out;
}

std::vector<double> interpolate(const PatchGrid& fine, const std::function<double(Point)>& source) {
  std::vector<double> out(fine.node_count());
  for (NodeIndex p = 0; p < out.size(); ++p) {
    const double v = source(fine.node(p));
    if (!std::isfinite(v)) {
      throw std::domain_error("interpolate: source is not finite at node " + std::to_string(p));
    }
    out[p] = v;
  }
  return out;
}

std::vector<double> interpolate(const PatchGrid& fine, const PatchGrid& source_grid,
                                std::span<const double> source_coefficients) {
  return interpolate(fine, [&](Point x) {
    if (!source_grid.domain().contains(x, 1e-12)) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return evaluate_expansion(source_grid, source_coefficients, x).value;
  });
}

}  // namespace pumdd
