#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "pumdd/quadrature.hpp"

using namespace pumdd;

TEST(GaussLegendre, ExactForPolynomialsUpToDegree2nMinus1) {
  for (int n = 1; n <= 10; ++n) {
    const GaussRule r = gauss_legendre(n);
    ASSERT_EQ(r.points.size(), static_cast<std::size_t>(n));
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += r.weights[k] * std::pow(r.points[k], d);
      const double exact = d % 2 == 1 ? 0.0 : 2.0 / (d + 1);
      EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " d=" << d;
    }
  }
  EXPECT_THROW(gauss_legendre(0), std::invalid_argument);
}

TEST(GaussLegendre, AgreesWithGolubWelsch) {
  for (int n : {2, 5, 8}) {
    const GaussRule r = gauss_legendre(n);
    const oracle::Rule o = oracle::golub_welsch(n);
    for (int k = 0; k < n; ++k) {
      EXPECT_NEAR(r.points[k], o.x[k], 1e-14);
      EXPECT_NEAR(r.weights[k], o.w[k], 1e-14);
    }
  }
}

TEST(QuadratureMesh, AreaAndMoments) {
  const PatchGrid g(3, Domain::centered_unit_square());
  const QuadratureMesh q = build_quadrature(g);
  EXPECT_NEAR(q.total_weight(), 1.0, 1e-13);
  EXPECT_NEAR(q.integrate([](Point) { return 1.0; }), 1.0, 1e-13);
  EXPECT_NEAR(q.integrate([](Point x) { return x.x1 * x.x1; }), 1.0 / 12.0, 1e-12);
}

TEST(QuadratureMesh, CellsAlignWithBreakpoints) {
  const PatchGrid g(2, Domain({0.0, -1.0}, {2.0, 3.0}));
  const QuadratureMesh q = build_quadrature(g);
  for (int axis = 0; axis < 2; ++axis) {
    const auto breaks = q.breaks(axis);
    for (const double b : g.breakpoints(axis)) {
      bool found = false;
      for (const double e : breaks) found = found || std::abs(e - b) <= 1e-14;
      EXPECT_TRUE(found) << b;
    }
  }
  EXPECT_NEAR(q.total_weight(), 8.0, 1e-12);
}

TEST(QuadratureMesh, PuIntegralMatchesRefinedOracle) {
  const PatchGrid g(2, Domain::centered_unit_square());
  const QuadratureMesh q = build_quadrature(g);
  const auto rule = oracle::fine_rule(g, 12, 2);
  for (int i = 0; i < g.patch_count(); ++i) {
    auto phi = [&](Point x) { return evaluate_pu(g, i, x).value; };
    const double ref = oracle::integrate(rule, phi);
    EXPECT_NEAR(q.integrate(phi), ref, 1e-10 * std::abs(ref)) << "patch " << i;
  }
}

TEST(QuadratureMesh, RefinedKeepsArea) {
  const PatchGrid g(1, Domain::centered_unit_square());
  const QuadratureMesh q = build_quadrature(g).refined(3, 4);
  EXPECT_EQ(q.cell_count(), 9u * 9u);
  EXPECT_NEAR(q.total_weight(), 1.0, 1e-14);
}
