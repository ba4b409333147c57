#include "pumdd/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace pumdd {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                           std::vector<int> col_indices, std::vector<double> values)
    : rows_(rows), cols_(cols), row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)), values_(std::move(values)) {
  if (row_offsets_.size() != rows_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size()) {
    throw std::invalid_argument("SparseMatrix: inconsistent compressed-row arrays");
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= rows ||
        static_cast<std::size_t>(t.col) >= cols) {
      throw std::out_of_range("SparseMatrix::from_triplets: index out of range");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<int> cols_out;
  std::vector<double> vals;
  cols_out.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    const Triplet& head = triplets[k];
    double sum = 0.0;
    std::size_t m = k;
    while (m < triplets.size() && triplets[m].row == head.row && triplets[m].col == head.col) {
      sum += triplets[m].value;
      ++m;
    }
    cols_out.push_back(head.col);
    vals.push_back(sum);
    ++offsets[static_cast<std::size_t>(head.row) + 1];
    k = m;
  }
  for (std::size_t i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];
  return SparseMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<int> cols(n);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) cols[i] = static_cast<int>(i);
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

std::span<const int> SparseMatrix::row_cols(std::size_t i) const {
  return std::span<const int>(col_indices_).subspan(row_offsets_[i],
                                                    row_offsets_[i + 1] - row_offsets_[i]);
}

std::span<const double> SparseMatrix::row_values(std::size_t i) const {
  return std::span<const double>(values_).subspan(row_offsets_[i],
                                                  row_offsets_[i + 1] - row_offsets_[i]);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) throw std::out_of_range("SparseMatrix::at: index out of range");
  const auto c = row_cols(i);
  const auto it = std::lower_bound(c.begin(), c.end(), static_cast<int>(j));
  if (it == c.end() || *it != static_cast<int>(j)) return 0.0;
  return values_[row_offsets_[i] + static_cast<std::size_t>(it - c.begin())];
}

bool SparseMatrix::stores(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) return false;
  const auto c = row_cols(i);
  return std::binary_search(c.begin(), c.end(), static_cast<int>(j));
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) {
    throw std::invalid_argument("SparseMatrix::multiply: dimension mismatch");
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      s += values_[k] * x[static_cast<std::size_t>(col_indices_[k])];
    }
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(rows_);
  multiply(x, y);
  return y;
}

void SparseMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  if (x.size() != rows_ || y.size() != cols_) {
    throw std::invalid_argument("SparseMatrix::multiply_transpose: dimension mismatch");
  }
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      y[static_cast<std::size_t>(col_indices_[k])] += values_[k] * xi;
    }
  }
}

namespace {

std::vector<int> inverse_map(std::span<const int> indices, std::size_t n) {
  std::vector<int> map(n, -1);
  int prev = -1;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int g = indices[k];
    if (g <= prev || static_cast<std::size_t>(g) >= n) {
      throw std::invalid_argument("SparseMatrix: index list must be ascending and in range");
    }
    map[static_cast<std::size_t>(g)] = static_cast<int>(k);
    prev = g;
  }
  return map;
}

}  // namespace

SparseMatrix SparseMatrix::principal_submatrix(std::span<const int> indices) const {
  if (rows_ != cols_) throw std::logic_error("principal_submatrix: matrix is not square");
  const auto map = inverse_map(indices, cols_);
  std::vector<std::size_t> offsets{0};
  std::vector<int> cols;
  std::vector<double> vals;
  offsets.reserve(indices.size() + 1);
  for (const int g : indices) {
    const auto gi = static_cast<std::size_t>(g);
    for (std::size_t k = row_offsets_[gi]; k < row_offsets_[gi + 1]; ++k) {
      const int local = map[static_cast<std::size_t>(col_indices_[k])];
      if (local < 0) continue;
      cols.push_back(local);
      vals.push_back(values_[k]);
    }
    offsets.push_back(cols.size());
  }
  return SparseMatrix(indices.size(), indices.size(), std::move(offsets), std::move(cols),
                      std::move(vals));
}

SparseMatrix SparseMatrix::select_columns(std::span<const int> indices) const {
  const auto map = inverse_map(indices, cols_);
  std::vector<std::size_t> offsets{0};
  std::vector<int> cols;
  std::vector<double> vals;
  offsets.reserve(rows_ + 1);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const int local = map[static_cast<std::size_t>(col_indices_[k])];
      if (local < 0) continue;
      cols.push_back(local);
      vals.push_back(values_[k]);
    }
    offsets.push_back(cols.size());
  }
  return SparseMatrix(rows_, indices.size(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> offsets(cols_ + 1, 0);
  for (const int c : col_indices_) ++offsets[static_cast<std::size_t>(c) + 1];
  for (std::size_t j = 0; j < cols_; ++j) offsets[j + 1] += offsets[j];
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<int> cols(col_indices_.size());
  std::vector<double> vals(values_.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const auto c = static_cast<std::size_t>(col_indices_[k]);
      cols[cursor[c]] = static_cast<int>(i);
      vals[cursor[c]] = values_[k];
      ++cursor[c];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(offsets), std::move(cols), std::move(vals));
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (const double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseMatrix::symmetry_defect() const {
  if (rows_ != cols_) throw std::logic_error("symmetry_defect: matrix is not square");
  double defect = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(col_indices_[k]);
      defect = std::max(defect, std::abs(values_[k] - at(j, i)));
    }
  }
  return defect;
}

SparseMatrix galerkin_product(const SparseMatrix& r, const SparseMatrix& a) {
  if (a.rows() != a.cols() || r.cols() != a.rows()) {
    throw std::invalid_argument("galerkin_product: dimension mismatch");
  }
  // (R A) row by row with a dense accumulator, then (R A) R^T the same way
  // against R^T stored by rows.
  const SparseMatrix rt = r.transpose();
  auto product = [](const SparseMatrix& x, const SparseMatrix& y) {
    std::vector<std::size_t> offsets{0};
    std::vector<int> cols;
    std::vector<double> vals;
    std::vector<double> acc(y.cols(), 0.0);
    std::vector<char> used(y.cols(), 0);
    std::vector<int> pattern;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      pattern.clear();
      const auto xc = x.row_cols(i);
      const auto xv = x.row_values(i);
      for (std::size_t k = 0; k < xc.size(); ++k) {
        const auto yr = static_cast<std::size_t>(xc[k]);
        const auto yc = y.row_cols(yr);
        const auto yv = y.row_values(yr);
        for (std::size_t m = 0; m < yc.size(); ++m) {
          const auto j = static_cast<std::size_t>(yc[m]);
          if (!used[j]) {
            used[j] = 1;
            pattern.push_back(yc[m]);
          }
          acc[j] += xv[k] * yv[m];
        }
      }
      std::sort(pattern.begin(), pattern.end());
      for (const int j : pattern) {
        cols.push_back(j);
        vals.push_back(acc[static_cast<std::size_t>(j)]);
        acc[static_cast<std::size_t>(j)] = 0.0;
        used[static_cast<std::size_t>(j)] = 0;
      }
      offsets.push_back(cols.size());
    }
    return SparseMatrix(x.rows(), y.cols(), std::move(offsets), std::move(cols), std::move(vals));
  };
  return product(product(r, a), rt);
}

void write_matrix_market(const SparseMatrix& a, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto c = a.row_cols(i);
    const auto v = a.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      out << (i + 1) << ' ' << (c[k] + 1) << ' ' << v[k] << '\n';
    }
  }
}

}  // namespace pumdd
