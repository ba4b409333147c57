#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pumdd/pum_space.hpp"
#include "pumdd/quadrature.hpp"
#include "pumdd/sparse_matrix.hpp"

namespace pumdd {

/// Data of min 1/2 a(v, v) - (f, v) over v <= psi, where
/// a(w, v) = beta (Laplace w, Laplace v) + (w, v).
struct ProblemData {
  double beta = 0.1;
  std::function<double(Point)> source;
  std::function<double(Point)> obstacle;
  Domain domain = Domain::centered_unit_square();
};

/// beta > 0 and psi > 0 at `samples_per_side` points on every side of the
/// boundary. Throws std::invalid_argument otherwise.
void validate_problem(const ProblemData& data, int samples_per_side = 64);

/// Tabulated 1-D basis factors on one quadrature cell of one axis.
struct AxisCellTable {
  std::vector<int> dofs;  // interior axis indices j in [0, 3n - 2)
  std::vector<double> points;
  std::vector<double> weights;
  std::vector<Jet> jets;  // dofs.size() x points.size(), dof-major

  [[nodiscard]] const Jet& jet(std::size_t dof, std::size_t point) const {
    return jets[dof * points.size() + point];
  }
};

std::vector<AxisCellTable> tabulate_axis(const PatchGrid& grid, const QuadratureMesh& quad,
                                         int axis);

/// Throws std::invalid_argument when a grid breakpoint is missing from the
/// quadrature cell edges.
void check_consistent(const PatchGrid& grid, const QuadratureMesh& quad);

/// beta_weight * (Laplace b_p, Laplace b_q) + mass_weight * (b_p, b_q), with
/// an entry stored for every pair of nodes whose supports overlap on a set of
/// positive measure.
SparseMatrix assemble_operator(const PatchGrid& grid, const QuadratureMesh& quad,
                               double beta_weight, double mass_weight);

SparseMatrix assemble_stiffness(const PatchGrid& grid, const ProblemData& data,
                                const QuadratureMesh& quad);

SparseMatrix assemble_mass(const PatchGrid& grid, const QuadratureMesh& quad);

/// b[p] = (f, b_p)
std::vector<double> assemble_load(const PatchGrid& grid, const ProblemData& data,
                                  const QuadratureMesh& quad);

/// psi at every interior node.
std::vector<double> obstacle_vector(const PatchGrid& grid, const ProblemData& data);

/// u(x) = -Laplace y(x)
double recover_control(const PatchGrid& grid, std::span<const double> y, Point x);

/// J(y, u) = 1/2 ||y - f||^2 + beta/2 ||u||^2 with u = -Laplace y.
double objective(const PatchGrid& grid, const ProblemData& data, const QuadratureMesh& quad,
                 std::span<const double> y);

}  // namespace pumdd
