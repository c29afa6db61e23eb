#pragma once

#include <cstddef>
#include <vector>

namespace asjr {

/* Compressed sparse row matrix. Rows are contiguous in (cols, vals);
 * row r occupies [row_ptr[r], row_ptr[r+1]). */
struct CsrMatrix {
  int rows = 0;
  int cols_n = 0;
  std::vector<int> row_ptr;  // size rows + 1
  std::vector<int> cols;
  std::vector<double> vals;

  int nnz() const { return static_cast<int>(cols.size()); }

  /* y = A * x */
  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        acc += vals[k] * x[cols[k]];
      y[r] = acc;
    }
  }
};

/* Incremental CSR builder; entries must be appended row by row. */
class CsrBuilder {
 public:
  CsrBuilder(int rows, int cols) {
    m_.rows = rows;
    m_.cols_n = cols;
    m_.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  }
  void add(int row, int col, double val) {
    m_.cols.push_back(col);
    m_.vals.push_back(val);
    m_.row_ptr[static_cast<std::size_t>(row) + 1] =
        static_cast<int>(m_.cols.size());
  }
  CsrMatrix finish() {
    for (std::size_t r = 1; r < m_.row_ptr.size(); ++r)
      if (m_.row_ptr[r] < m_.row_ptr[r - 1]) m_.row_ptr[r] = m_.row_ptr[r - 1];
    return std::move(m_);
  }

 private:
  CsrMatrix m_;
};

}  // namespace asjr
