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

// Prediction accuracy metrics on held-out configurations.
//
// NMSE compares full channels. zeta compares, per entry, the spread of the
// measurements across configurations to the spread of the prediction error,
// so a configuration-independent offset in the prediction does not matter.

#ifndef DMACE_METRICS_HPP
#define DMACE_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmace/errors.hpp"
#include "dmace/tensor.hpp"

namespace dmace {

inline void check_same_shape(const Tensor3& a, const Tensor3& b) {
  if (!(a.dims() == b.dims())) throw ArgumentError("measured and predicted tensors differ in shape");
}

inline double nmse(const Tensor3& meas, const Tensor3& pred) {
  check_same_shape(meas, pred);
  double num = 0.0, den = 0.0;
  for (Index k = 0; k < meas.dim3(); ++k) {
    num += (meas.slice(k) - pred.slice(k)).squaredNorm();
    den += meas.slice(k).squaredNorm();
  }
  if (!(den > 0.0)) throw DegenerateInputError("nmse: measured channels have zero energy");
  return num / den;
}

inline double to_db10(double x) { return 10.0 * std::log10(x); }

// Population standard deviation over the third mode of entry (i, j).
inline double entry_sd(const Tensor3& t, Index i, Index j) {
  const Index q = t.dim3();
  Complex mean{0.0, 0.0};
  for (Index k = 0; k < q; ++k) mean += t(i, j, k);
  mean /= static_cast<double>(q);
  double acc = 0.0;
  for (Index k = 0; k < q; ++k) acc += std::norm(t(i, j, k) - mean);
  return std::sqrt(acc / static_cast<double>(q));
}

// Error spread at or below this fraction of the entry's magnitude is rounding
// noise, not model error.
inline constexpr double kZetaZeroSpread = 1e-13;

struct ZetaResult {
  double zeta_db = 0.0;
  double zeta_linear = 0.0;
  RealMatrix per_entry;  // linear ratios; +inf where the error does not vary (see kZetaZeroSpread)
  int infinite_entries = 0;
};

inline ZetaResult zeta(const Tensor3& meas, const Tensor3& pred) {
  check_same_shape(meas, pred);
  if (meas.dim3() < 2) throw DegenerateInputError("zeta: need at least two configurations");
  Tensor3 err = meas;
  err -= pred;
  ZetaResult r;
  r.per_entry.resize(meas.dim1(), meas.dim2());
  double sum = 0.0;
  int finite = 0;
  for (Index j = 0; j < meas.dim2(); ++j)
    for (Index i = 0; i < meas.dim1(); ++i) {
      const double e = entry_sd(err, i, j);
      double scale = 0.0;
      for (Index k = 0; k < meas.dim3(); ++k) scale = std::max(scale, std::abs(meas(i, j, k)) + std::abs(pred(i, j, k)));
      if (e <= kZetaZeroSpread * scale) {
        r.per_entry(i, j) = std::numeric_limits<double>::infinity();
        ++r.infinite_entries;
        continue;
      }
      r.per_entry(i, j) = entry_sd(meas, i, j) / e;
      sum += r.per_entry(i, j);
      ++finite;
    }
  r.zeta_linear = finite > 0 ? sum / finite : std::numeric_limits<double>::infinity();
  r.zeta_db = 20.0 * std::log10(r.zeta_linear);
  return r;
}

struct MetricReport {
  double nmse = 0.0;
  double nmse_db = 0.0;
  double zeta_db = 0.0;
  RealMatrix per_entry_zeta;
  int infinite_zeta_entries = 0;
  Index q_count = 0;
};

inline MetricReport evaluate(const Tensor3& meas, const Tensor3& pred) {
  MetricReport m;
  m.nmse = nmse(meas, pred);
  m.nmse_db = to_db10(m.nmse);
  const auto z = zeta(meas, pred);
  m.zeta_db = z.zeta_db;
  m.per_entry_zeta = z.per_entry;
  m.infinite_zeta_entries = z.infinite_entries;
  m.q_count = meas.dim3();
  return m;
}

struct ScalarAlignment {
  Complex gamma;
  double a_residual = 0.0;  // ||A_true - gamma A_hat|| / ||A_true||
  double b_residual = 0.0;  // ||B_true - B_hat / gamma|| / ||B_true||
};

inline ScalarAlignment align_scalar(const ComplexMatrix& a_hat, const ComplexMatrix& b_hat,
                                    const ComplexMatrix& a_true, const ComplexMatrix& b_true) {
  if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols() || b_hat.rows() != b_true.rows() ||
      b_hat.cols() != b_true.cols())
    throw ArgumentError("align_scalar: shape mismatch");
  const double na = a_hat.squaredNorm();
  if (!(na > 0.0)) throw DegenerateInputError("align_scalar: A_hat is zero");
  ScalarAlignment s;
  s.gamma = a_hat.reshaped().dot(a_true.reshaped()) / na;
  const double at = a_true.norm(), bt = b_true.norm();
  s.a_residual = (a_true - s.gamma * a_hat).norm() / (at > 0.0 ? at : 1.0);
  s.b_residual = (b_true - b_hat / s.gamma).norm() / (bt > 0.0 ? bt : 1.0);
  return s;
}

}  // namespace dmace

#endif  // DMACE_METRICS_HPP
