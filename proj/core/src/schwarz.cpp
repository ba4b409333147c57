#include "pumdd/schwarz.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace pumdd {

Overlap parse_overlap(std::string_view text) {
  if (text == "small") return Overlap::small;
  if (text == "generous") return Overlap::generous;
  throw std::invalid_argument("unknown overlap mode '" + std::string(text) +
                              "' (expected small|generous)");
}

std::string_view to_string(Overlap overlap) {
  return overlap == Overlap::small ? "small" : "generous";
}

std::vector<double> truncate(std::span<const double> values, const IndexSet& inactive) {
  std::vector<double> out;
  out.reserve(inactive.size());
  for (const int p : inactive) out.push_back(values[static_cast<std::size_t>(p)]);
  return out;
}

std::vector<double> embed(std::span<const double> reduced, const IndexSet& inactive,
                          std::size_t n) {
  if (reduced.size() != inactive.size()) {
    throw std::invalid_argument("embed: reduced vector and index set differ in length");
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < inactive.size(); ++i) {
    out[static_cast<std::size_t>(inactive[i])] = reduced[i];
  }
  return out;
}

namespace {

int exact_sqrt(int j) {
  if (j < 1) return -1;
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(j))));
  return r * r == j ? r : -1;
}

}  // namespace

SubdomainDecomposition partition_subdomains(const PatchGrid& grid, const IndexSet& inactive,
                                            int subdomains, Overlap overlap) {
  const int b = exact_sqrt(subdomains);
  if (b < 0) {
    throw std::invalid_argument("partition_subdomains: J = " + std::to_string(subdomains) +
                                " is not a perfect square");
  }
  if (b > grid.patches_per_axis()) {
    throw std::invalid_argument("partition_subdomains: sqrt(J) = " + std::to_string(b) +
                                " exceeds the " + std::to_string(grid.patches_per_axis()) +
                                " patches per axis");
  }
  const Domain& dom = grid.domain();
  SubdomainDecomposition d;
  d.count = subdomains;
  d.blocks_per_axis = b;
  d.diameter = std::max(dom.side(0), dom.side(1)) / b;

  // h is the patch width and H the block width. Extending by one patch width
  // adds exactly one ring of neighbouring patches' nodes.
  const int n = grid.patches_per_axis();
  const double ext[2] = {
      dom.side(0) / (overlap == Overlap::small ? n : b),
      dom.side(1) / (overlap == Overlap::small ? n : b),
  };
  d.overlap_width = std::max(ext[0], ext[1]);
  auto block_edge = [&](int axis, int k) {
    const Interval r = dom.axis(axis);
    return k == b ? r.upper : r.lower + r.width() * k / b;
  };
  for (int by = 0; by < b; ++by) {
    for (int bx = 0; bx < b; ++bx) {
      Box box{{block_edge(0, bx), block_edge(0, bx + 1)}, {block_edge(1, by), block_edge(1, by + 1)}};
      Box extended{{std::max(dom.axis(0).lower, box.x1.lower - ext[0]),
                    std::min(dom.axis(0).upper, box.x1.upper + ext[0])},
                   {std::max(dom.axis(1).lower, box.x2.lower - ext[1]),
                    std::min(dom.axis(1).upper, box.x2.upper + ext[1])}};
      d.blocks.push_back(box);
      d.extended_blocks.push_back(extended);
    }
  }
  d.members.resize(static_cast<std::size_t>(subdomains));
  const double slack = 1e-9 * std::min(grid.spacing(0), grid.spacing(1));
  for (std::size_t i = 0; i < inactive.size(); ++i) {
    const Point x = grid.node(static_cast<NodeIndex>(inactive[i]));
    for (std::size_t j = 0; j < d.extended_blocks.size(); ++j) {
      if (d.extended_blocks[j].contains(x, slack)) d.members[j].push_back(static_cast<int>(i));
    }
  }
  return d;
}

int coarse_level_for(int subdomains, int fine_level) {
  const int b = exact_sqrt(subdomains);
  if (b < 0) throw std::invalid_argument("coarse_level_for: J is not a perfect square");
  int level = 0;
  while ((1 << (level + 1)) <= b) ++level;
  return std::clamp(level, 1, fine_level);
}

SparseMatrix coarse_interpolation(const PatchGrid& fine, const PatchGrid& coarse) {
  const int last = coarse.axis_node_count() - 1;
  struct Term {
    int interior;
    double value;
  };
  auto terms = [&](int axis, double t) {
    std::vector<Term> out;
    for (const int patch : coarse.patches_covering(axis, t)) {
      for (int local = 0; local < 3; ++local) {
        const int k = 3 * patch + local;
        if (k == 0 || k == last) continue;
        const double v = coarse.basis_axis(axis, patch, local, t).value;
        if (v != 0.0) out.push_back({k - 1, v});
      }
    }
    return out;
  };
  std::vector<Triplet> entries;
  for (NodeIndex p = 0; p < fine.node_count(); ++p) {
    const Point x = fine.node(p);
    const auto xs = terms(0, x.x1);
    const auto ys = terms(1, x.x2);
    for (const auto& ty : ys) {
      for (const auto& tx : xs) {
        entries.push_back({static_cast<int>(coarse.node_index(tx.interior, ty.interior)),
                           static_cast<int>(p), tx.value * ty.value});
      }
    }
  }
  return SparseMatrix::from_triplets(coarse.node_count(), fine.node_count(), std::move(entries));
}

CoarseRestriction truncate_coarse(const SparseMatrix& interpolation, const IndexSet& inactive) {
  const SparseMatrix cols = interpolation.select_columns(inactive);
  IndexSet kept;
  for (std::size_t i = 0; i < cols.rows(); ++i) {
    const auto v = cols.row_values(i);
    if (std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; })) {
      kept.push_back(static_cast<int>(i));
    }
  }
  CoarseRestriction out;
  out.dropped_rows = cols.rows() - kept.size();
  std::vector<std::size_t> offsets{0};
  std::vector<int> c;
  std::vector<double> vals;
  for (const int i : kept) {
    const auto rc = cols.row_cols(static_cast<std::size_t>(i));
    const auto rv = cols.row_values(static_cast<std::size_t>(i));
    c.insert(c.end(), rc.begin(), rc.end());
    vals.insert(vals.end(), rv.begin(), rv.end());
    offsets.push_back(c.size());
  }
  out.matrix = SparseMatrix(kept.size(), inactive.size(), std::move(offsets), std::move(c),
                            std::move(vals));
  return out;
}

CoarseRestriction build_coarse_restriction(const PatchGrid& fine, const PatchGrid& coarse,
                                           const IndexSet& inactive) {
  if (coarse.level() > fine.level()) {
    throw std::invalid_argument("build_coarse_restriction: coarse level exceeds fine level");
  }
  return truncate_coarse(coarse_interpolation(fine, coarse), inactive);
}

namespace {

using EigenSparse = Eigen::SparseMatrix<double>;
using SparseLlt = Eigen::SimplicialLLT<EigenSparse, Eigen::Lower>;

EigenSparse to_eigen(const SparseMatrix& a) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.nnz());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto c = a.row_cols(i);
    const auto v = a.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      t.emplace_back(static_cast<int>(i), c[k], v[k]);
    }
  }
  EigenSparse m(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

struct LocalSolver {
  IndexSet members;
  std::unique_ptr<SparseLlt> llt;
};

}  // namespace

struct SchwarzPreconditioner::Impl {
  std::size_t dimension = 0;
  SchwarzLevel level = SchwarzLevel::one_level;
  SubdomainDecomposition decomposition;
  SchwarzOptions options;
  std::vector<LocalSolver> locals;
  SparseMatrix coarse_restriction;
  std::unique_ptr<SparseLlt> coarse_llt;
  Eigen::MatrixXd coarse_pseudo_inverse;
  bool coarse_rank_deficient = false;

  // Local correction of job j (subdomain j, or the coarse space for
  // j == locals.size()), returned together with the global positions it
  // touches.
  void local_correction(std::size_t j, std::span<const double> r, Eigen::VectorXd& out) const {
    if (j < locals.size()) {
      const LocalSolver& s = locals[j];
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(s.members.size()));
      for (std::size_t k = 0; k < s.members.size(); ++k) {
        rhs[static_cast<Eigen::Index>(k)] = r[static_cast<std::size_t>(s.members[k])];
      }
      out = s.llt->solve(rhs);
      return;
    }
    Eigen::VectorXd rc(static_cast<Eigen::Index>(coarse_restriction.rows()));
    coarse_restriction.multiply(r, std::span<double>(rc.data(), coarse_restriction.rows()));
    if (coarse_llt) {
      out = coarse_llt->solve(rc);
    } else {
      out = coarse_pseudo_inverse * rc;
    }
  }

  void accumulate(std::size_t j, const Eigen::VectorXd& c, std::span<double> z) const {
    if (j < locals.size()) {
      const LocalSolver& s = locals[j];
      for (std::size_t k = 0; k < s.members.size(); ++k) {
        z[static_cast<std::size_t>(s.members[k])] += c[static_cast<Eigen::Index>(k)];
      }
      return;
    }
    for (std::size_t i = 0; i < coarse_restriction.rows(); ++i) {
      const double ci = c[static_cast<Eigen::Index>(i)];
      const auto cols = coarse_restriction.row_cols(i);
      const auto vals = coarse_restriction.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        z[static_cast<std::size_t>(cols[k])] += vals[k] * ci;
      }
    }
  }

  [[nodiscard]] std::size_t job_count() const {
    return locals.size() + (level == SchwarzLevel::two_level && coarse_restriction.rows() > 0);
  }
};

SchwarzPreconditioner::SchwarzPreconditioner() : impl_(std::make_shared<Impl>()) {}
SchwarzPreconditioner::~SchwarzPreconditioner() = default;
SchwarzPreconditioner::SchwarzPreconditioner(const SchwarzPreconditioner&) = default;
SchwarzPreconditioner& SchwarzPreconditioner::operator=(const SchwarzPreconditioner&) = default;
SchwarzPreconditioner::SchwarzPreconditioner(SchwarzPreconditioner&&) noexcept = default;
SchwarzPreconditioner& SchwarzPreconditioner::operator=(SchwarzPreconditioner&&) noexcept =
    default;
SchwarzPreconditioner::SchwarzPreconditioner(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

std::size_t SchwarzPreconditioner::dimension() const { return impl_->dimension; }
SchwarzLevel SchwarzPreconditioner::level() const { return impl_->level; }
const SubdomainDecomposition& SchwarzPreconditioner::decomposition() const {
  return impl_->decomposition;
}
std::size_t SchwarzPreconditioner::coarse_dimension() const {
  return impl_->coarse_restriction.rows();
}
bool SchwarzPreconditioner::coarse_rank_deficient() const { return impl_->coarse_rank_deficient; }

void SchwarzPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
  const Impl& im = *impl_;
  if (r.size() != im.dimension || z.size() != im.dimension) {
    throw std::invalid_argument("SchwarzPreconditioner::apply: dimension mismatch");
  }
  std::fill(z.begin(), z.end(), 0.0);
  const std::size_t jobs = im.job_count();
  const auto threads = static_cast<std::size_t>(std::max(1, im.options.threads));
  if (threads == 1 || jobs < 2) {
    Eigen::VectorXd c;
    for (std::size_t j = 0; j < jobs; ++j) {
      im.local_correction(j, r, c);
      im.accumulate(j, c, z);
    }
    return;
  }
  std::vector<Eigen::VectorXd> results(im.options.deterministic ? jobs : 0);
  std::mutex sum_mutex;
  {
    std::vector<std::jthread> pool;
    const std::size_t workers = std::min(threads, jobs);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        Eigen::VectorXd c;
        for (std::size_t j = w; j < jobs; j += workers) {
          if (im.options.deterministic) {
            im.local_correction(j, r, results[j]);
          } else {
            im.local_correction(j, r, c);
            const std::scoped_lock lock(sum_mutex);
            im.accumulate(j, c, z);
          }
        }
      });
    }
  }
  if (im.options.deterministic) {
    for (std::size_t j = 0; j < jobs; ++j) im.accumulate(j, results[j], z);
  }
}

std::vector<double> SchwarzPreconditioner::apply(std::span<const double> r) const {
  std::vector<double> z(r.size());
  apply(r, z);
  return z;
}

LinearOperator SchwarzPreconditioner::as_operator() const {
  return [self = *this](std::span<const double> r, std::span<double> z) { self.apply(r, z); };
}

namespace {

std::shared_ptr<SchwarzPreconditioner::Impl> make_local_solvers(
    std::shared_ptr<SchwarzPreconditioner::Impl> im, const SparseMatrix& reduced) {
  for (std::size_t j = 0; j < im->decomposition.members.size(); ++j) {
    const IndexSet& members = im->decomposition.members[j];
    if (members.empty()) continue;
    for (const int m : members) {
      if (m < 0 || static_cast<std::size_t>(m) >= reduced.rows()) {
        throw std::invalid_argument("Schwarz: subdomain member outside the reduced system");
      }
    }
    LocalSolver s;
    s.members = members;
    s.llt = std::make_unique<SparseLlt>(to_eigen(reduced.principal_submatrix(members)));
    if (s.llt->info() != Eigen::Success) {
      throw FactorizationError("Schwarz: Cholesky factorization of subdomain " +
                               std::to_string(j) + " (" + std::to_string(members.size()) +
                               " unknowns) failed");
    }
    im->locals.push_back(std::move(s));
  }
  return im;
}

}  // namespace

SchwarzPreconditioner build_one_level(const SparseMatrix& reduced, SubdomainDecomposition decomp,
                                      const SchwarzOptions& options) {
  if (reduced.rows() != reduced.cols()) {
    throw std::invalid_argument("build_one_level: matrix is not square");
  }
  auto im = std::make_shared<SchwarzPreconditioner::Impl>();
  im->dimension = reduced.rows();
  im->level = SchwarzLevel::one_level;
  im->decomposition = std::move(decomp);
  im->options = options;
  return SchwarzPreconditioner(make_local_solvers(std::move(im), reduced));
}

SchwarzPreconditioner build_two_level(const SparseMatrix& reduced, SubdomainDecomposition decomp,
                                      const CoarseRestriction& coarse,
                                      const SchwarzOptions& options) {
  if (reduced.rows() != reduced.cols()) {
    throw std::invalid_argument("build_two_level: matrix is not square");
  }
  if (coarse.matrix.rows() > 0 && coarse.matrix.cols() != reduced.rows()) {
    throw std::invalid_argument("build_two_level: coarse restriction has wrong column count");
  }
  auto im = std::make_shared<SchwarzPreconditioner::Impl>();
  im->dimension = reduced.rows();
  im->level = SchwarzLevel::two_level;
  im->decomposition = std::move(decomp);
  im->options = options;
  im->coarse_restriction = coarse.matrix;
  make_local_solvers(im, reduced);
  if (coarse.matrix.rows() > 0) {
    const EigenSparse a0 = to_eigen(galerkin_product(coarse.matrix, reduced));
    auto llt = std::make_unique<SparseLlt>(a0);
    if (llt->info() == Eigen::Success) {
      im->coarse_llt = std::move(llt);
    } else {
      // Truncation can leave coarse functions that coincide on the few
      // inactive nodes they still touch; fall back to the pseudo-inverse.
      const Eigen::MatrixXd dense = Eigen::MatrixXd(a0);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (dense + dense.transpose()));
      if (eig.info() != Eigen::Success) {
        throw FactorizationError("Schwarz: coarse matrix could not be factorized");
      }
      const Eigen::VectorXd& ev = eig.eigenvalues();
      const double cutoff = 1e-12 * ev.cwiseAbs().maxCoeff();
      Eigen::VectorXd inv(ev.size());
      for (Eigen::Index i = 0; i < ev.size(); ++i) inv[i] = ev[i] > cutoff ? 1.0 / ev[i] : 0.0;
      im->coarse_pseudo_inverse =
          eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
      im->coarse_rank_deficient = true;
    }
  }
  return SchwarzPreconditioner(std::move(im));
}

PreconditionerFactory make_schwarz_factory(const PatchGrid& fine, const SchwarzConfig& config) {
  std::shared_ptr<const SparseMatrix> interpolation;
  if (config.level == SchwarzLevel::two_level) {
    const PatchGrid coarse(coarse_level_for(config.subdomains, fine.level()), fine.domain());
    interpolation = std::make_shared<const SparseMatrix>(coarse_interpolation(fine, coarse));
  }
  return [grid = fine, config, interpolation](const SparseMatrix& reduced,
                                              const IndexSet& inactive) -> LinearOperator {
    SubdomainDecomposition decomp =
        partition_subdomains(grid, inactive, config.subdomains, config.overlap);
    if (config.level == SchwarzLevel::one_level) {
      return build_one_level(reduced, std::move(decomp), config.options).as_operator();
    }
    return build_two_level(reduced, std::move(decomp), truncate_coarse(*interpolation, inactive),
                           config.options)
        .as_operator();
  };
}

}  // namespace pumdd
