#pragma once

#include "gfnlab/errors.hpp"
#include "gfnlab/graph.hpp"
#include "gfnlab/tensor.hpp"

namespace gfnlab {

/// out = A * dense. Each output row accumulates the stored entries of the
/// corresponding sparse row in storage order, so results are reproducible.
template <typename T>
Matrix<T> spmm(const CsrMatrix& a, const Matrix<T>& dense) {
  require(a.cols == dense.rows(), "spmm: sparse cols (" + std::to_string(a.cols) + ") != dense rows (" +
                                      std::to_string(dense.rows()) + ")");
  Matrix<T> out = Matrix<T>::Zero(a.rows, dense.cols());
  for (Index r = 0; r < a.rows; ++r) {
    auto dst = out.row(r);
    for (Index p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p)
      dst.noalias() += static_cast<T>(a.values[p]) * dense.row(a.col_idx[p]);
  }
  return out;
}

template <typename T>
Matrix<T> spmm(const NormalizedAdjacency& a, const Matrix<T>& dense) {
  return spmm(a.matrix, dense);
}

}  // namespace gfnlab
