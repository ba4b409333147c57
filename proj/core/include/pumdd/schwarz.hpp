#pragma once

// One- and two-level additive Schwarz preconditioners for the stiffness
// operator restricted to the inactive nodes of a PDAS iteration:
//
//   B_OL = sum_j I_j A_j^{-1} I_j^T
//   B_TL = B_OL + R_0^T (R_0 A R_0^T)^{-1} R_0
//
// Subdomains are an sqrt(J) x sqrt(J) grid of blocks extended by one patch
// width h (small overlap) or by the block width H (generous overlap); a node
// belongs to a subdomain when it is inactive and lies in the extended block.
// Rows of R_0 are coarse PUM basis functions interpolated at the fine nodes
// and truncated to the inactive ones.

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "pumdd/krylov.hpp"
#include "pumdd/pdas.hpp"
#include "pumdd/pum_space.hpp"
#include "pumdd/sparse_matrix.hpp"

namespace pumdd {

enum class Overlap { small, generous };
enum class SchwarzLevel { one_level, two_level };

Overlap parse_overlap(std::string_view text);
std::string_view to_string(Overlap overlap);

struct Box {
  Interval x1;
  Interval x2;

  [[nodiscard]] bool contains(Point p, double slack = 0.0) const {
    return p.x1 >= x1.lower - slack && p.x1 <= x1.upper + slack && p.x2 >= x2.lower - slack &&
           p.x2 <= x2.upper + slack;
  }
};

/// Keeps the entries of `values` at the inactive nodes.
std::vector<double> truncate(std::span<const double> values, const IndexSet& inactive);
/// Inverse of truncate on vectors supported on the inactive nodes.
std::vector<double> embed(std::span<const double> reduced, const IndexSet& inactive,
                          std::size_t n);

struct SubdomainDecomposition {
  int count = 0;
  int blocks_per_axis = 0;
  /// Side of an unextended block (H), per axis maximum.
  double diameter = 0.0;
  /// Extension applied to each side before clipping to the domain.
  double overlap_width = 0.0;
  std::vector<Box> blocks;
  std::vector<Box> extended_blocks;
  /// Positions into the inactive list (not global node numbers), ascending.
  std::vector<IndexSet> members;
};

/// Throws std::invalid_argument unless J is a perfect square with
/// sqrt(J) <= 2^level.
SubdomainDecomposition partition_subdomains(const PatchGrid& grid, const IndexSet& inactive,
                                            int subdomains, Overlap overlap);

/// Level of the coarse PUM space paired with J subdomains (H ~ 1/sqrt(J)).
int coarse_level_for(int subdomains, int fine_level);

struct CoarseRestriction {
  /// kept coarse functions x inactive fine nodes
  SparseMatrix matrix;
  std::size_t dropped_rows = 0;
};

/// Coarse basis functions interpolated at the fine nodes (coarse functions x
/// all fine nodes), before truncation.
SparseMatrix coarse_interpolation(const PatchGrid& fine, const PatchGrid& coarse);

CoarseRestriction build_coarse_restriction(const PatchGrid& fine, const PatchGrid& coarse,
                                           const IndexSet& inactive);
/// Same, from a precomputed coarse_interpolation matrix.
CoarseRestriction truncate_coarse(const SparseMatrix& interpolation, const IndexSet& inactive);

/// Raised when a subdomain or coarse matrix cannot be Cholesky-factorized.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SchwarzOptions {
  int threads = 1;
  /// Sum local corrections in subdomain order. When false and threads > 1,
  /// corrections are added as the solves complete.
  bool deterministic = true;
};

class SchwarzPreconditioner {
 public:
  SchwarzPreconditioner();
  ~SchwarzPreconditioner();
  SchwarzPreconditioner(const SchwarzPreconditioner&);
  SchwarzPreconditioner& operator=(const SchwarzPreconditioner&);
  SchwarzPreconditioner(SchwarzPreconditioner&&) noexcept;
  SchwarzPreconditioner& operator=(SchwarzPreconditioner&&) noexcept;

  /// z = B r. Throws std::invalid_argument on a dimension mismatch.
  void apply(std::span<const double> r, std::span<double> z) const;
  [[nodiscard]] std::vector<double> apply(std::span<const double> r) const;

  /// Shares the factorizations with this object.
  [[nodiscard]] LinearOperator as_operator() const;

  [[nodiscard]] std::size_t dimension() const;
  [[nodiscard]] SchwarzLevel level() const;
  [[nodiscard]] const SubdomainDecomposition& decomposition() const;
  [[nodiscard]] std::size_t coarse_dimension() const;
  /// The coarse matrix was singular and its pseudo-inverse is used.
  [[nodiscard]] bool coarse_rank_deficient() const;

  struct Impl;

 private:
  friend SchwarzPreconditioner build_one_level(const SparseMatrix&, SubdomainDecomposition,
                                               const SchwarzOptions&);
  friend SchwarzPreconditioner build_two_level(const SparseMatrix&, SubdomainDecomposition,
                                               const CoarseRestriction&, const SchwarzOptions&);
  explicit SchwarzPreconditioner(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

SchwarzPreconditioner build_one_level(const SparseMatrix& reduced, SubdomainDecomposition decomp,
                                      const SchwarzOptions& options = {});

/// An empty restriction gives an operator equal to the one-level one.
SchwarzPreconditioner build_two_level(const SparseMatrix& reduced, SubdomainDecomposition decomp,
                                      const CoarseRestriction& coarse,
                                      const SchwarzOptions& options = {});

struct SchwarzConfig {
  int subdomains = 4;
  Overlap overlap = Overlap::small;
  SchwarzLevel level = SchwarzLevel::one_level;
  SchwarzOptions options;
};

/// Factory for pdas_solve: rebuilds the decomposition and preconditioner for
/// every inactive set. The coarse interpolation matrix is computed once.
PreconditionerFactory make_schwarz_factory(const PatchGrid& fine, const SchwarzConfig& config);

}  // namespace pumdd
