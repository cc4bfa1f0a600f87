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


#ifndef DMACE_TEST_SUPPORT_HPP
#define DMACE_TEST_SUPPORT_HPP

#include <complex>
#include <cstdint>
#include <random>

#include "dmace/tensor.hpp"

namespace dmace::testing {

inline ComplexMatrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

inline Tensor3 random_tensor(std::mt19937_64& rng, Index i, Index j, Index k) {
  Tensor3 t(i, j, k);
  for (Index kk = 0; kk < k; ++kk) t.set_slice(kk, random_matrix(rng, i, j));
  return t;
}

inline double rel_err(const ComplexMatrix& got, const ComplexMatrix& want) {
  const double scale = want.norm();
  return (got - want).norm() / (scale > 0.0 ? scale : 1.0);
}

inline double rel_err(const Tensor3& got, const Tensor3& want) {
  double num = 0.0;
  for (Index k = 0; k < want.dim3(); ++k) num += (got.slice(k) - want.slice(k)).squaredNorm();
  const double den = want.squared_norm();
  return std::sqrt(num / (den > 0.0 ? den : 1.0));
}

}  // namespace dmace::testing

#endif  // DMACE_TEST_SUPPORT_HPP
