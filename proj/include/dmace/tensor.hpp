// Copyright 2026 The dmace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Third-order tensor container and the multilinear algebra used by the
// estimators: unfoldings, mode-n products, Kronecker products, (half-)
// vectorization, duplication matrices and an SVD pseudoinverse.
//
// Conventions
//   vec(M)   stacks the columns of M (column-major).
//   vech(M)  stacks the lower triangle including the diagonal, column by
//            column: (0,0),(1,0),...,(n-1,0),(1,1),(2,1),...,(n-1,n-1).
//   Tensor3  stores frontal slices contiguously, each slice column-major.
//   Modes are numbered 1, 2, 3.

#ifndef DMACE_TENSOR_HPP
#define DMACE_TENSOR_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dmace/errors.hpp"

namespace dmace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// max |M_ij - M_ji| <= tol. Non-square matrices are never symmetric.
inline bool is_symmetric(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = j + 1; i < m.rows(); ++i)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

struct TensorDims {
  Index i = 0;
  Index j = 0;
  Index k = 0;

  Index size() const { return i * j * k; }
  friend bool operator==(const TensorDims&, const TensorDims&) = default;
};

class Tensor3 {
 public:
  Tensor3() = default;

  Tensor3(Index i, Index j, Index k) : dims_{i, j, k} {
    if (i < 0 || j < 0 || k < 0) throw ArgumentError("Tensor3: negative dimension");
    data_.assign(static_cast<std::size_t>(dims_.size()), Complex(0.0, 0.0));
  }

  Tensor3(TensorDims dims, std::vector<Complex> data) : dims_(dims), data_(std::move(data)) {
    if (dims.i < 0 || dims.j < 0 || dims.k < 0) throw ArgumentError("Tensor3: negative dimension");
    if (static_cast<Index>(data_.size()) != dims_.size())
      throw ArgumentError("Tensor3: data length " + std::to_string(data_.size()) +
                          " does not match I*J*K = " + std::to_string(dims_.size()));
  }

  // Stack equally sized matrices along the third mode.
  static Tensor3 from_slices(const std::vector<ComplexMatrix>& slices) {
    if (slices.empty()) return Tensor3();
    const Index rows = slices.front().rows();
    const Index cols = slices.front().cols();
    Tensor3 t(rows, cols, static_cast<Index>(slices.size()));
    for (std::size_t k = 0; k < slices.size(); ++k) {
      if (slices[k].rows() != rows || slices[k].cols() != cols)
        throw ArgumentError("Tensor3::from_slices: slice " + std::to_string(k) + " has a different shape");
      t.set_slice(static_cast<Index>(k), slices[k]);
    }
    return t;
  }

  const TensorDims& dims() const { return dims_; }
  Index dim1() const { return dims_.i; }
  Index dim2() const { return dims_.j; }
  Index dim3() const { return dims_.k; }
  const std::vector<Complex>& data() const { return data_; }

  Complex& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
  const Complex& operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

  Eigen::Map<const ComplexMatrix> slice(Index k) const {
    check_slice(k);
    return {data_.data() + k * dims_.i * dims_.j, dims_.i, dims_.j};
  }

  Eigen::Map<ComplexMatrix> slice(Index k) {
    check_slice(k);
    return {data_.data() + k * dims_.i * dims_.j, dims_.i, dims_.j};
  }

  void set_slice(Index k, const ComplexMatrix& m) {
    if (m.rows() != dims_.i || m.cols() != dims_.j) throw ArgumentError("Tensor3::set_slice: shape mismatch");
    slice(k) = m;
  }

  // Keeps slices [first, first + count).
  Tensor3 slices(Index first, Index count) const {
    if (first < 0 || count < 0 || first + count > dims_.k) throw ArgumentError("Tensor3::slices: range out of bounds");
    const auto per = static_cast<std::ptrdiff_t>(dims_.i * dims_.j);
    std::vector<Complex> out(data_.begin() + first * per, data_.begin() + (first + count) * per);
    return Tensor3({dims_.i, dims_.j, count}, std::move(out));
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& x : data_) s += std::norm(x);
    return s;
  }

  friend bool operator==(const Tensor3& a, const Tensor3& b) { return a.dims_ == b.dims_ && a.data_ == b.data_; }

  Tensor3& operator-=(const Tensor3& other) {
    if (!(dims_ == other.dims_)) throw ArgumentError("Tensor3: shape mismatch in subtraction");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= other.data_[n];
    return *this;
  }

  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }

 private:
  std::size_t offset(Index i, Index j, Index k) const {
    return static_cast<std::size_t>(i + dims_.i * (j + dims_.j * k));
  }
  void check_slice(Index k) const {
    if (k < 0 || k >= dims_.k) throw ArgumentError("Tensor3: slice index " + std::to_string(k) + " out of range");
  }

  TensorDims dims_;
  std::vector<Complex> data_;
};

namespace detail {

inline void check_mode(int mode) {
  if (mode < 1 || mode > 3) throw ArgumentError("mode must be 1, 2 or 3 (got " + std::to_string(mode) + ")");
}

inline std::array<Index, 2> unfolded_shape(const TensorDims& d, int mode) {
  switch (mode) {
    case 1: return {d.i, d.j * d.k};
    case 2: return {d.j, d.i * d.k};
    default: return {d.k, d.i * d.j};
  }
}

}  // namespace detail

// Mode-1: [T_1, ..., T_K]; mode-2: [T_1^T, ..., T_K^T]; mode-3: row k is vec(T_k)^T.
inline ComplexMatrix unfold(const Tensor3& t, int mode) {
  detail::check_mode(mode);
  const auto& d = t.dims();
  const auto shape = detail::unfolded_shape(d, mode);
  ComplexMatrix m(shape[0], shape[1]);
  for (Index k = 0; k < d.k; ++k) {
    const auto s = t.slice(k);
    switch (mode) {
      case 1: m.middleCols(k * d.j, d.j) = s; break;
      case 2: m.middleCols(k * d.i, d.i) = s.transpose(); break;
      default: m.row(k) = s.reshaped().transpose(); break;
    }
  }
  return m;
}

inline Tensor3 fold(const ComplexMatrix& m, int mode, const TensorDims& dims) {
  detail::check_mode(mode);
  const auto shape = detail::unfolded_shape(dims, mode);
  if (m.rows() != shape[0] || m.cols() != shape[1])
    throw ArgumentError("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        ", mode-" + std::to_string(mode) + " unfolding needs " + std::to_string(shape[0]) + "x" +
                        std::to_string(shape[1]));
  Tensor3 t(dims.i, dims.j, dims.k);
  for (Index k = 0; k < dims.k; ++k) {
    auto s = t.slice(k);
    switch (mode) {
      case 1: s = m.middleCols(k * dims.j, dims.j); break;
      case 2: s = m.middleCols(k * dims.i, dims.i).transpose(); break;
      default: s = m.row(k).transpose().reshaped(dims.i, dims.j); break;
    }
  }
  return t;
}

// T x_n M. For modes 1 and 2 this works slice by slice: Y_k = M T_k or T_k M^T.
inline Tensor3 mode_n_product(const Tensor3& t, const ComplexMatrix& m, int mode) {
  detail::check_mode(mode);
  const auto& d = t.dims();
  const Index n = mode == 1 ? d.i : mode == 2 ? d.j : d.k;
  if (m.cols() != n)
    throw ArgumentError("mode_n_product: matrix has " + std::to_string(m.cols()) + " columns, mode-" +
                        std::to_string(mode) + " dimension is " + std::to_string(n));
  if (mode == 3) return fold(m * unfold(t, 3), 3, {d.i, d.j, m.rows()});
  Tensor3 y = mode == 1 ? Tensor3(m.rows(), d.j, d.k) : Tensor3(d.i, m.rows(), d.k);
  for (Index k = 0; k < d.k; ++k) {
    if (mode == 1)
      y.slice(k).noalias() = m * t.slice(k);
    else
      y.slice(k).noalias() = t.slice(k) * m.transpose();
  }
  return y;
}

template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedA::Scalar, typename DerivedB::Scalar>::ReturnType;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline ComplexVector vec(const ComplexMatrix& m) { return m.reshaped(); }

inline Index vech_size(Index n) { return n * (n + 1) / 2; }

// Position of (row, col), row >= col, inside vech of an n x n matrix.
inline Index vech_index(Index row, Index col, Index n) {
  return col * n - col * (col - 1) / 2 + (row - col);
}

inline ComplexVector vech(const ComplexMatrix& m) {
  if (m.rows() != m.cols())
    throw ArgumentError("vech: matrix must be square (got " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ")");
  const Index n = m.rows();
  ComplexVector v(vech_size(n));
  Index p = 0;
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) v(p++) = m(i, j);
  return v;
}

// Pairs (row, col) with row > col in vech order. These are the off-diagonal
// columns that follow the n diagonal ones after permutation.
inline std::vector<std::pair<Index, Index>> strict_lower_pairs(Index n) {
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(vech_size(n) - n));
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) pairs.emplace_back(i, j);
  return pairs;
}

struct DuplicationPair {
  RealMatrix W;  // n^2 x n(n+1)/2, vec(M) = W vech(M) for symmetric M
  RealMatrix P;  // permutation; (X P) lists diagonal entries first
};

inline DuplicationPair build_duplication(Index n) {
  if (n < 1) throw ArgumentError("build_duplication: n must be positive");
  const Index m = vech_size(n);
  DuplicationPair dp{RealMatrix::Zero(n * n, m), RealMatrix::Zero(m, m)};
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const Index c = vech_index(i, j, n);
      dp.W(i + n * j, c) = 1.0;
      dp.W(j + n * i, c) = 1.0;
    }
  }
  for (Index i = 0; i < n; ++i) dp.P(vech_index(i, i, n), i) = 1.0;
  Index next = n;
  for (const auto& [i, j] : strict_lower_pairs(n)) dp.P(vech_index(i, j, n), next++) = 1.0;
  return dp;
}

struct PseudoInverse {
  ComplexMatrix matrix;
  Index rank = 0;
  double sigma_max = 0.0;
};

// Moore-Penrose pseudoinverse. Singular values at or below rank_tol * sigma_max
// are dropped.
inline PseudoInverse pinv(const ComplexMatrix& m, double rank_tol = 1e-10) {
  PseudoInverse out;
  if (m.size() == 0) {
    out.matrix = ComplexMatrix::Zero(m.cols(), m.rows());
    return out;
  }
  Eigen::BDCSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  out.sigma_max = s.size() > 0 ? s(0) : 0.0;
  const double cutoff = rank_tol * out.sigma_max;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      inv(i) = 1.0 / s(i);
      ++out.rank;
    }
  }
  out.matrix = svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
  return out;
}

}  // namespace dmace

#endif  // DMACE_TENSOR_HPP
