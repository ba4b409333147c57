#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace pumdd {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed-row matrix. Square operators (A_h, its inactive restriction,
/// subdomain blocks) store both triangles; the coarse restriction is the
/// one rectangular user.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
               std::vector<int> col_indices, std::vector<double> values);

  /// Duplicate (row, col) entries are summed. Explicit zeros are kept, so the
  /// pattern reflects structure rather than numerical cancellation.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t dimension() const { return rows_; }
  [[nodiscard]] std::size_t nnz() const { return values_.size(); }
  [[nodiscard]] bool empty() const { return rows_ == 0; }

  [[nodiscard]] std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  [[nodiscard]] std::span<const int> col_indices() const { return col_indices_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<const int> row_cols(std::size_t i) const;
  [[nodiscard]] std::span<const double> row_values(std::size_t i) const;

  /// Entry (i, j); zero when not stored.
  [[nodiscard]] double at(std::size_t i, std::size_t j) const;
  [[nodiscard]] bool stores(std::size_t i, std::size_t j) const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;

  /// Rows and columns listed in `indices` (ascending), renumbered 0..k-1.
  [[nodiscard]] SparseMatrix principal_submatrix(std::span<const int> indices) const;
  /// Columns listed in `indices` (ascending), renumbered 0..k-1; all rows.
  [[nodiscard]] SparseMatrix select_columns(std::span<const int> indices) const;
  [[nodiscard]] SparseMatrix transpose() const;

  [[nodiscard]] double max_abs() const;
  /// max |A_ij - A_ji| over the stored pattern of both triangles.
  [[nodiscard]] double symmetry_defect() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

/// R A R^T for a rectangular R and square symmetric A.
SparseMatrix galerkin_product(const SparseMatrix& r, const SparseMatrix& a);

/// MatrixMarket coordinate real general format, 1-based indices.
void write_matrix_market(const SparseMatrix& a, std::ostream& out);

}  // namespace pumdd
