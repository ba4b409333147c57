#include "pumdd/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pumdd {

void validate_problem(const ProblemData& data, int samples_per_side) {
  if (!(data.beta > 0.0) || !std::isfinite(data.beta)) {
    throw std::invalid_argument("ProblemData: beta must be positive");
  }
  if (!data.source || !data.obstacle) {
    throw std::invalid_argument("ProblemData: source and obstacle must be set");
  }
  const Point lo = data.domain.lower();
  const Point hi = data.domain.upper();
  for (int k = 0; k <= samples_per_side; ++k) {
    const double s = static_cast<double>(k) / samples_per_side;
    const double x1 = lo.x1 + s * (hi.x1 - lo.x1);
    const double x2 = lo.x2 + s * (hi.x2 - lo.x2);
    for (const Point p : {Point{x1, lo.x2}, Point{x1, hi.x2}, Point{lo.x1, x2}, Point{hi.x1, x2}}) {
      if (!(data.obstacle(p) > 0.0)) {
        throw std::invalid_argument("ProblemData: obstacle must be positive on the boundary");
      }
    }
  }
}

std::vector<AxisCellTable> tabulate_axis(const PatchGrid& grid, const QuadratureMesh& quad,
                                         int axis) {
  const int last = grid.axis_node_count() - 1;
  std::vector<AxisCellTable> out(quad.cell_count(axis));
  for (std::size_t c = 0; c < out.size(); ++c) {
    const AxisCellRule rule = quad.axis_rule(axis, c);
    AxisCellTable& t = out[c];
    t.points = rule.points;
    t.weights = rule.weights;
    const double mid = 0.5 * (rule.cell.lower + rule.cell.upper);
    for (const int patch : grid.patches_covering(axis, mid)) {
      for (int local = 0; local < 3; ++local) {
        const int k = 3 * patch + local;
        if (k == 0 || k == last) continue;
        t.dofs.push_back(k - 1);
        for (const double x : t.points) t.jets.push_back(grid.basis_axis(axis, patch, local, x));
      }
    }
  }
  return out;
}

void check_consistent(const PatchGrid& grid, const QuadratureMesh& quad) {
  for (int axis = 0; axis < 2; ++axis) {
    const auto edges = quad.breaks(axis);
    const double tol = 1e-12 * grid.domain().side(axis);
    for (const double b : grid.breakpoints(axis)) {
      const auto it = std::lower_bound(edges.begin(), edges.end(), b - tol);
      if (it == edges.end() || std::abs(*it - b) > tol) {
        throw std::invalid_argument("quadrature mesh does not resolve the grid breakpoint " +
                                    std::to_string(b) + " on axis " + std::to_string(axis));
      }
    }
  }
}

namespace {

// 1-D moment matrices over the axis dofs: mass (X_a, X_c), mixed
// (X_a'', X_c) and second-derivative (X_a'', X_c''), plus the overlap pattern.
struct AxisMoments {
  int size = 0;
  std::vector<double> mass;
  std::vector<double> mixed;
  std::vector<double> second;
  std::vector<std::vector<int>> pattern;

  [[nodiscard]] double m(int a, int c) const { return mass[idx(a, c)]; }
  [[nodiscard]] double x(int a, int c) const { return mixed[idx(a, c)]; }
  [[nodiscard]] double s(int a, int c) const { return second[idx(a, c)]; }
  [[nodiscard]] std::size_t idx(int a, int c) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(size) +
           static_cast<std::size_t>(c);
  }
};

AxisMoments axis_moments(const PatchGrid& grid, const QuadratureMesh& quad, int axis) {
  AxisMoments mom;
  mom.size = grid.interior_per_axis();
  const auto total = static_cast<std::size_t>(mom.size) * static_cast<std::size_t>(mom.size);
  mom.mass.assign(total, 0.0);
  mom.mixed.assign(total, 0.0);
  mom.second.assign(total, 0.0);
  mom.pattern.resize(static_cast<std::size_t>(mom.size));
  for (const auto& t : tabulate_axis(grid, quad, axis)) {
    for (std::size_t a = 0; a < t.dofs.size(); ++a) {
      for (std::size_t c = 0; c < t.dofs.size(); ++c) {
        double m = 0.0, x = 0.0, s = 0.0;
        for (std::size_t q = 0; q < t.points.size(); ++q) {
          const Jet& ja = t.jet(a, q);
          const Jet& jc = t.jet(c, q);
          m += t.weights[q] * ja.value * jc.value;
          x += t.weights[q] * ja.d2 * jc.value;
          s += t.weights[q] * ja.d2 * jc.d2;
        }
        const auto k = mom.idx(t.dofs[a], t.dofs[c]);
        mom.mass[k] += m;
        mom.mixed[k] += x;
        mom.second[k] += s;
        mom.pattern[static_cast<std::size_t>(t.dofs[a])].push_back(t.dofs[c]);
      }
    }
  }
  for (auto& row : mom.pattern) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return mom;
}

}  // namespace

SparseMatrix assemble_operator(const PatchGrid& grid, const QuadratureMesh& quad,
                               double beta_weight, double mass_weight) {
  check_consistent(grid, quad);
  // Basis functions are tensor products on a rectangle, so every entry is a
  // sum of products of 1-D integrals:
  //   (Lap b_p, Lap b_q) = S1 M2 + X1(p,q) X2(q,p) + X1(q,p) X2(p,q) + M1 S2.
  const AxisMoments ax = axis_moments(grid, quad, 0);
  const AxisMoments ay = axis_moments(grid, quad, 1);
  const int m = grid.interior_per_axis();
  const std::size_t n = grid.node_count();

  std::vector<std::size_t> offsets(n + 1, 0);
  for (int j2 = 0; j2 < m; ++j2) {
    for (int j1 = 0; j1 < m; ++j1) {
      offsets[grid.node_index(j1, j2) + 1] =
          ax.pattern[static_cast<std::size_t>(j1)].size() *
          ay.pattern[static_cast<std::size_t>(j2)].size();
    }
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<int> cols(offsets.back());
  std::vector<double> vals(offsets.back());

  for (int j2 = 0; j2 < m; ++j2) {
    for (int j1 = 0; j1 < m; ++j1) {
      std::size_t k = offsets[grid.node_index(j1, j2)];
      // Columns come out ascending: k2 is the slow index of node_index.
      for (const int k2 : ay.pattern[static_cast<std::size_t>(j2)]) {
        for (const int k1 : ax.pattern[static_cast<std::size_t>(j1)]) {
          const double lap = ax.s(j1, k1) * ay.m(j2, k2) + ax.x(j1, k1) * ay.x(k2, j2) +
                             ax.x(k1, j1) * ay.x(j2, k2) + ax.m(j1, k1) * ay.s(j2, k2);
          const double mass = ax.m(j1, k1) * ay.m(j2, k2);
          cols[k] = static_cast<int>(grid.node_index(k1, k2));
          vals[k] = beta_weight * lap + mass_weight * mass;
          ++k;
        }
      }
    }
  }
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix assemble_stiffness(const PatchGrid& grid, const ProblemData& data,
                                const QuadratureMesh& quad) {
  if (!(data.beta > 0.0)) throw std::invalid_argument("assemble_stiffness: beta must be positive");
  return assemble_operator(grid, quad, data.beta, 1.0);
}

SparseMatrix assemble_mass(const PatchGrid& grid, const QuadratureMesh& quad) {
  return assemble_operator(grid, quad, 0.0, 1.0);
}

std::vector<double> assemble_load(const PatchGrid& grid, const ProblemData& data,
                                  const QuadratureMesh& quad) {
  check_consistent(grid, quad);
  const auto tx = tabulate_axis(grid, quad, 0);
  const auto ty = tabulate_axis(grid, quad, 1);
  std::vector<double> b(grid.node_count(), 0.0);
  std::vector<double> fw;    // weighted source values, y-point major
  std::vector<double> part;  // sum over y points, per (y dof, x point)
  for (const auto& cy : ty) {
    for (const auto& cx : tx) {
      const std::size_t nx = cx.points.size();
      const std::size_t ny = cy.points.size();
      fw.assign(nx * ny, 0.0);
      for (std::size_t qy = 0; qy < ny; ++qy) {
        for (std::size_t qx = 0; qx < nx; ++qx) {
          fw[qy * nx + qx] =
              cx.weights[qx] * cy.weights[qy] * data.source({cx.points[qx], cy.points[qy]});
        }
      }
      part.assign(cy.dofs.size() * nx, 0.0);
      for (std::size_t b2 = 0; b2 < cy.dofs.size(); ++b2) {
        for (std::size_t qy = 0; qy < ny; ++qy) {
          const double yv = cy.jet(b2, qy).value;
          for (std::size_t qx = 0; qx < nx; ++qx) part[b2 * nx + qx] += yv * fw[qy * nx + qx];
        }
      }
      for (std::size_t b2 = 0; b2 < cy.dofs.size(); ++b2) {
        for (std::size_t b1 = 0; b1 < cx.dofs.size(); ++b1) {
          double s = 0.0;
          for (std::size_t qx = 0; qx < nx; ++qx) s += cx.jet(b1, qx).value * part[b2 * nx + qx];
          b[grid.node_index(cx.dofs[b1], cy.dofs[b2])] += s;
        }
      }
    }
  }
  return b;
}

std::vector<double> obstacle_vector(const PatchGrid& grid, const ProblemData& data) {
  if (!data.obstacle) throw std::invalid_argument("obstacle_vector: obstacle is not set");
  std::vector<double> out(grid.node_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = data.obstacle(grid.node(p));
  return out;
}

double recover_control(const PatchGrid& grid, std::span<const double> y, Point x) {
  return -evaluate_expansion(grid, y, x).laplacian;
}

double objective(const PatchGrid& grid, const ProblemData& data, const QuadratureMesh& quad,
                 std::span<const double> y) {
  check_consistent(grid, quad);
  if (y.size() != grid.node_count()) {
    throw std::invalid_argument("objective: coefficient vector has wrong length");
  }
  const auto tx = tabulate_axis(grid, quad, 0);
  const auto ty = tabulate_axis(grid, quad, 1);
  double misfit = 0.0;
  double control = 0.0;
  for (const auto& cy : ty) {
    for (const auto& cx : tx) {
      for (std::size_t qy = 0; qy < cy.points.size(); ++qy) {
        for (std::size_t qx = 0; qx < cx.points.size(); ++qx) {
          double value = 0.0;
          double lap = 0.0;
          for (std::size_t b2 = 0; b2 < cy.dofs.size(); ++b2) {
            const Jet& Y = cy.jet(b2, qy);
            for (std::size_t b1 = 0; b1 < cx.dofs.size(); ++b1) {
              const double c = y[grid.node_index(cx.dofs[b1], cy.dofs[b2])];
              if (c == 0.0) continue;
              const Jet& X = cx.jet(b1, qx);
              value += c * X.value * Y.value;
              lap += c * (X.d2 * Y.value + X.value * Y.d2);
            }
          }
          const double w = cx.weights[qx] * cy.weights[qy];
          const double r = value - data.source({cx.points[qx], cy.points[qy]});
          misfit += w * r * r;
          control += w * lap * lap;
        }
      }
    }
  }
  return 0.5 * misfit + 0.5 * data.beta * control;
}

}  // namespace pumdd
