#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "pumdd/assembly.hpp"
#include "pumdd/schwarz.hpp"

using namespace pumdd;

namespace {

ProblemData example_data() {
  ProblemData d;
  d.beta = 0.1;
  d.source = [](Point x) {
    return 10.0 * (std::sin(2.0 * std::numbers::pi * (x.x1 + 0.5)) + (x.x2 + 0.5));
  };
  d.obstacle = [](Point) { return 0.01; };
  return d;
}

struct Setup {
  PatchGrid grid;
  SparseMatrix a;
  IndexSet inactive;
  SparseMatrix reduced;
};

Setup setup(int level, IndexSet active = {}) {
  PatchGrid g(level, Domain::centered_unit_square());
  auto a = assemble_stiffness(g, example_data(), build_quadrature(g));
  IndexSet inactive = complement(active, g.node_count());
  auto reduced = a.principal_submatrix(inactive);
  return {std::move(g), std::move(a), std::move(inactive), std::move(reduced)};
}

IndexSet all_nodes(std::size_t n) {
  IndexSet s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<int>(i);
  return s;
}

// Dense sum over subdomains of I_j A_j^{-1} I_j^T.
oracle::Dense dense_one_level(const SparseMatrix& reduced, const SubdomainDecomposition& d) {
  const oracle::Dense a = oracle::to_dense(reduced);
  oracle::Dense b = oracle::Dense::Zero(a.rows(), a.cols());
  for (const auto& m : d.members) {
    const auto k = static_cast<Eigen::Index>(m.size());
    oracle::Dense aj(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) aj(i, j) = a(m[i], m[j]);
    }
    const oracle::Dense inv = aj.inverse();
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) b(m[i], m[j]) += inv(i, j);
    }
  }
  return b;
}

oracle::Dense dense_coarse(const SparseMatrix& reduced, const CoarseRestriction& c) {
  const oracle::Dense r = oracle::to_dense(c.matrix);
  const oracle::Dense a0 = r * oracle::to_dense(reduced) * r.transpose();
  return r.transpose() * a0.inverse() * r;
}

// Per-axis patch indices covered by a block of the patch-aligned partition,
// extended by `ring` patches on each side.
bool in_patch_block(const PatchGrid& g, NodeIndex p, int blocks, int bx, int by, int ring) {
  const int per = g.patches_per_axis() / blocks;
  const auto f = g.factors(p);
  auto inside = [&](int patch, int b) { return patch >= b * per - ring && patch < (b + 1) * per + ring; };
  return inside(f[0].patch, bx) && inside(f[1].patch, by);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<double> random_vector(std::size_t n, std::mt19937& rng) {
  std::normal_distribution<double> u;
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Partition, SmallOverlapAddsOnePatchRing) {
  const auto s = setup(2);
  const auto d = partition_subdomains(s.grid, s.inactive, 4, Overlap::small);
  ASSERT_EQ(d.members.size(), 4u);
  std::vector<int> cover(s.grid.node_count(), 0);
  for (int by = 0; by < 2; ++by) {
    for (int bx = 0; bx < 2; ++bx) {
      IndexSet expect;
      for (NodeIndex p = 0; p < s.grid.node_count(); ++p) {
        if (in_patch_block(s.grid, p, 2, bx, by, 1)) expect.push_back(static_cast<int>(p));
      }
      EXPECT_EQ(d.members[by * 2 + bx], expect);
      for (const int p : expect) ++cover[p];
    }
  }
  for (const int c : cover) EXPECT_GE(c, 1);
  // Horizontal neighbours share the two patch columns around their common
  // edge (6 axis nodes) over 3 patch rows less one boundary node (8 nodes).
  IndexSet shared;
  std::set_intersection(d.members[0].begin(), d.members[0].end(), d.members[1].begin(),
                        d.members[1].end(), std::back_inserter(shared));
  EXPECT_EQ(shared.size(), 6u * 8u);
}

TEST(Partition, GenerousOverlapAddsOneBlock) {
  const auto s = setup(3);
  const auto d = partition_subdomains(s.grid, s.inactive, 16, Overlap::generous);
  for (int by = 0; by < 4; ++by) {
    for (int bx = 0; bx < 4; ++bx) {
      IndexSet expect;
      for (NodeIndex p = 0; p < s.grid.node_count(); ++p) {
        if (in_patch_block(s.grid, p, 4, bx, by, 2)) expect.push_back(static_cast<int>(p));
      }
      EXPECT_EQ(d.members[by * 4 + bx], expect);
    }
  }
  const auto d4 = partition_subdomains(s.grid, s.inactive, 4, Overlap::generous);
  for (const auto& m : d4.members) EXPECT_EQ(m.size(), s.grid.node_count());
}

TEST(Partition, SingleSubdomainAndDiagonal) {
  const auto s = setup(2);
  const auto one = partition_subdomains(s.grid, s.inactive, 1, Overlap::small);
  ASSERT_EQ(one.members.size(), 1u);
  EXPECT_EQ(one.members[0], all_nodes(s.grid.node_count()));
  const auto diag = partition_subdomains(s.grid, s.inactive, 16, Overlap::small);
  ASSERT_EQ(diag.members.size(), 16u);
  // A corner patch plus its ring: 2 x 2 patches minus boundary nodes.
  EXPECT_EQ(diag.members[0].size(), 5u * 5u);
  // Patch (1, 1) plus its ring: 3 x 3 patches, one boundary node dropped
  // per axis.
  EXPECT_EQ(diag.members[5].size(), 8u * 8u);
}

TEST(Partition, MembersArePositionsInTheInactiveList) {
  const auto s = setup(2, {0, 1, 2, 50});
  const auto d = partition_subdomains(s.grid, s.inactive, 4, Overlap::small);
  for (const auto& m : d.members) {
    for (const int i : m) {
      ASSERT_LT(static_cast<std::size_t>(i), s.inactive.size());
    }
  }
  EXPECT_EQ(d.members[0].front(), 0);  // node 3, the first inactive one
}

TEST(Partition, RejectsBadCounts) {
  const auto s = setup(1);
  EXPECT_THROW(partition_subdomains(s.grid, s.inactive, 8, Overlap::small), std::invalid_argument);
  EXPECT_THROW(partition_subdomains(s.grid, s.inactive, 16, Overlap::small), std::invalid_argument);
  EXPECT_THROW(partition_subdomains(s.grid, s.inactive, 0, Overlap::small), std::invalid_argument);
  EXPECT_EQ(parse_overlap("generous"), Overlap::generous);
  EXPECT_THROW(parse_overlap("large"), std::invalid_argument);
}

TEST(CoarseSpace, LevelForSubdomains) {
  EXPECT_EQ(coarse_level_for(4, 3), 1);
  EXPECT_EQ(coarse_level_for(16, 3), 2);
  EXPECT_EQ(coarse_level_for(256, 5), 4);
  EXPECT_EQ(coarse_level_for(1, 3), 1);
}

TEST(CoarseSpace, SameLevelIsIdentity) {
  const auto s = setup(2);
  const auto c = build_coarse_restriction(s.grid, s.grid, s.inactive);
  EXPECT_EQ(c.dropped_rows, 0u);
  const auto dense = oracle::to_dense(c.matrix);
  EXPECT_LE((dense - oracle::Dense::Identity(dense.rows(), dense.cols())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CoarseSpace, InterpolationMatchesPointwiseEvaluation) {
  const PatchGrid fine(3, Domain::centered_unit_square());
  const PatchGrid coarse(1, Domain::centered_unit_square());
  const auto r = coarse_interpolation(fine, coarse);
  ASSERT_EQ(r.rows(), coarse.node_count());
  ASSERT_EQ(r.cols(), fine.node_count());
  for (NodeIndex i = 0; i < coarse.node_count(); ++i) {
    for (NodeIndex p = 0; p < fine.node_count(); ++p) {
      EXPECT_NEAR(r.at(i, p), evaluate_basis(coarse, i, fine.node(p)).value, 1e-13);
    }
  }
}

TEST(CoarseSpace, AllActiveGivesEmptyRestriction) {
  const PatchGrid fine(2, Domain::centered_unit_square());
  const PatchGrid coarse(1, Domain::centered_unit_square());
  const auto c = build_coarse_restriction(fine, coarse, {});
  EXPECT_EQ(c.matrix.rows(), 0u);
  EXPECT_EQ(c.dropped_rows, coarse.node_count());
}

class SchwarzDense : public ::testing::TestWithParam<std::tuple<Overlap, SchwarzLevel>> {};

TEST_P(SchwarzDense, ApplyMatchesDenseFormula) {
  const auto [overlap, level] = GetParam();
  const auto s = setup(2, {0, 11, 45, 46, 99});
  auto d = partition_subdomains(s.grid, s.inactive, 4, overlap);
  oracle::Dense ref = dense_one_level(s.reduced, d);
  SchwarzPreconditioner b;
  if (level == SchwarzLevel::one_level) {
    b = build_one_level(s.reduced, d);
  } else {
    const PatchGrid coarse(1, s.grid.domain());
    const auto c = build_coarse_restriction(s.grid, coarse, s.inactive);
    ref += dense_coarse(s.reduced, c);
    b = build_two_level(s.reduced, d, c);
  }
  std::mt19937 rng(1);
  for (int t = 0; t < 5; ++t) {
    const auto r = random_vector(s.reduced.rows(), rng);
    const auto z = b.apply(r);
    const auto zr = oracle::to_std(ref * oracle::to_vec(r));
    double scale = 0.0;
    for (double v : zr) scale = std::max(scale, std::abs(v));
    EXPECT_LE(max_abs_diff(z, zr), 1e-12 * scale);
  }
}

TEST_P(SchwarzDense, SymmetricAndPositiveDefinite) {
  const auto [overlap, level] = GetParam();
  const auto s = setup(3, {10, 200, 201, 202});
  const auto d = partition_subdomains(s.grid, s.inactive, 16, overlap);
  SchwarzPreconditioner b = level == SchwarzLevel::one_level
                                ? build_one_level(s.reduced, d)
                                : build_two_level(s.reduced, d,
                                                  build_coarse_restriction(
                                                      s.grid, PatchGrid(2, s.grid.domain()), s.inactive));
  std::mt19937 rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto r = random_vector(b.dimension(), rng);
    const auto q = random_vector(b.dimension(), rng);
    const auto br = b.apply(r);
    const auto bq = b.apply(q);
    double rbq = 0.0, qbr = 0.0, nr = 0.0, nq = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      rbq += r[i] * bq[i];
      qbr += q[i] * br[i];
      nr += r[i] * r[i];
      nq += q[i] * q[i];
    }
    EXPECT_LE(std::abs(rbq - qbr), 1e-12 * std::sqrt(nr * nq));
  }
  for (int t = 0; t < 100; ++t) {
    const auto r = random_vector(b.dimension(), rng);
    const auto z = b.apply(r);
    double rz = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) rz += r[i] * z[i];
    EXPECT_GT(rz, 0.0);
  }
}

TEST_P(SchwarzDense, LanczosEstimateWithinTenPercentOfDense) {
  const auto [overlap, level] = GetParam();
  const auto s = setup(2);
  const auto d = partition_subdomains(s.grid, s.inactive, 4, overlap);
  const SchwarzPreconditioner b =
      level == SchwarzLevel::one_level
          ? build_one_level(s.reduced, d)
          : build_two_level(s.reduced, d,
                            build_coarse_restriction(s.grid, PatchGrid(1, s.grid.domain()), s.inactive));
  const double dense = oracle::dense_condition(b.as_operator(), s.reduced);
  const std::vector<double> rhs(s.reduced.rows(), 1.0);
  const auto& m = s.reduced;
  const auto r = pcg([&m](std::span<const double> x, std::span<double> y) { m.multiply(x, y); },
                     rhs, b.as_operator(), {});
  EXPECT_LE(std::abs(r.report.condition_estimate - dense), 0.1 * dense);
}

INSTANTIATE_TEST_SUITE_P(
    Variants, SchwarzDense,
    ::testing::Combine(::testing::Values(Overlap::small, Overlap::generous),
                       ::testing::Values(SchwarzLevel::one_level, SchwarzLevel::two_level)));

TEST(Schwarz, SingleSubdomainIsExactInverse) {
  const auto s = setup(2, {3, 4});
  const auto d = partition_subdomains(s.grid, s.inactive, 1, Overlap::small);
  const auto b = build_one_level(s.reduced, d);
  std::mt19937 rng(3);
  const auto r = random_vector(b.dimension(), rng);
  const auto z = b.apply(r);
  const auto az = s.reduced.multiply(z);
  EXPECT_LE(max_abs_diff(az, r), 1e-12 * 10.0);
  EXPECT_NEAR(oracle::dense_condition(b.as_operator(), s.reduced), 1.0, 1e-10);
}

TEST(Schwarz, GenerousCoverageAtFourSubdomainsGivesUnitCondition) {
  for (int level : {2, 3}) {
    const auto s = setup(level);
    const auto b = build_one_level(s.reduced, partition_subdomains(s.grid, s.inactive, 4, Overlap::generous));
    EXPECT_NEAR(oracle::dense_condition(b.as_operator(), s.reduced), 1.0, 1e-9);
  }
}

TEST(Schwarz, EmptyCoarseSpaceEqualsOneLevel) {
  const auto s = setup(2);
  const auto d = partition_subdomains(s.grid, s.inactive, 4, Overlap::small);
  const auto one = build_one_level(s.reduced, d);
  const auto two = build_two_level(s.reduced, d, CoarseRestriction{});
  std::mt19937 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto r = random_vector(one.dimension(), rng);
    EXPECT_LE(max_abs_diff(one.apply(r), two.apply(r)), 1e-14 * 10.0);
  }
  EXPECT_EQ(two.coarse_dimension(), 0u);
}

TEST(Schwarz, CoarseTermShiftsSpectrumBoundedly) {
  // Adding one more subspace can raise lambda_max by at most 1 and cannot
  // lower lambda_min.
  const auto s = setup(2);
  const auto d = partition_subdomains(s.grid, s.inactive, 4, Overlap::small);
  const auto one = oracle::dense_spectrum(build_one_level(s.reduced, d).as_operator(), s.reduced);
  const auto two = oracle::dense_spectrum(
      build_two_level(s.reduced, d,
                      build_coarse_restriction(s.grid, PatchGrid(1, s.grid.domain()), s.inactive))
          .as_operator(),
      s.reduced);
  EXPECT_GE(two.min, one.min * (1.0 - 1e-10));
  EXPECT_LE(two.max, one.max + 1.0 + 1e-10);
}

TEST(Schwarz, TwoLevelImprovesOnOneLevelAtLevelThree) {
  const auto s = setup(3);
  const auto d = partition_subdomains(s.grid, s.inactive, 4, Overlap::small);
  const double one = oracle::dense_condition(build_one_level(s.reduced, d).as_operator(), s.reduced);
  const double two = oracle::dense_condition(
      build_two_level(s.reduced, d,
                      build_coarse_restriction(s.grid, PatchGrid(1, s.grid.domain()), s.inactive))
          .as_operator(),
      s.reduced);
  EXPECT_LT(two, one);
}

TEST(Schwarz, ThreadedDeterministicApplyIsBitwiseReproducible) {
  const auto s = setup(3, {7, 8, 9});
  const auto d = partition_subdomains(s.grid, s.inactive, 16, Overlap::small);
  const auto c = build_coarse_restriction(s.grid, PatchGrid(2, s.grid.domain()), s.inactive);
  SchwarzOptions threaded;
  threaded.threads = 4;
  threaded.deterministic = true;
  const auto serial = build_two_level(s.reduced, d, c);
  const auto parallel = build_two_level(s.reduced, d, c, threaded);
  std::mt19937 rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto r = random_vector(serial.dimension(), rng);
    EXPECT_EQ(serial.apply(r), parallel.apply(r));
    EXPECT_EQ(parallel.apply(r), parallel.apply(r));
  }
}

TEST(Schwarz, ApplyChecksDimensions) {
  const auto s = setup(1);
  const auto b = build_one_level(s.reduced, partition_subdomains(s.grid, s.inactive, 4, Overlap::small));
  EXPECT_THROW(b.apply(std::vector<double>(3, 1.0)), std::invalid_argument);
  const auto z = b.apply(std::vector<double>(b.dimension(), 0.0));
  for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(Schwarz, FactoryRebuildsPerInactiveSet) {
  const auto s = setup(2);
  SchwarzConfig cfg;
  cfg.subdomains = 4;
  cfg.level = SchwarzLevel::two_level;
  const auto factory = make_schwarz_factory(s.grid, cfg);
  const IndexSet inactive = complement({0, 1, 2}, s.grid.node_count());
  const auto reduced = s.a.principal_submatrix(inactive);
  const LinearOperator op = factory(reduced, inactive);
  std::vector<double> r(inactive.size(), 1.0), z(inactive.size());
  op(r, z);
  const auto ref = build_two_level(reduced, partition_subdomains(s.grid, inactive, 4, Overlap::small),
                                   build_coarse_restriction(s.grid, PatchGrid(1, s.grid.domain()), inactive))
                       .apply(r);
  EXPECT_LE(max_abs_diff(z, ref), 1e-14);
}
