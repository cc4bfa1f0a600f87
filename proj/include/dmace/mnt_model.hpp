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
// Multiport-network forward model of a dynamic metasurface antenna.
//
//   r(v)   = alpha * 1 + (beta - alpha) * v
//   Omega  = (I - diag(r) Gamma)^-1 diag(r)
//   H(v)   = H0 + A Omega B
//
// H0 (N_U x N_F) is the direct feed-to-user channel, A (N_U x N_M) the
// element-to-user channel, B (N_M x N_F) the feed-to-element channel and
// Gamma (N_M x N_M, symmetric) the mutual coupling between the tunable
// elements' virtual ports.

#ifndef DMACE_MNT_MODEL_HPP
#define DMACE_MNT_MODEL_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dmace/errors.hpp"
#include "dmace/tensor.hpp"

namespace dmace {

// Largest admissible condition number of I - Phi Gamma.
inline constexpr double kMaxCouplingCondition = 1e8;

class DmaConfiguration {
 public:
  DmaConfiguration() = default;

  explicit DmaConfiguration(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] > 1) throw ArgumentError("DmaConfiguration: entry " + std::to_string(i) + " is not binary");
  }

  static DmaConfiguration zeros(Index n) { return DmaConfiguration(std::vector<std::uint8_t>(n, 0)); }
  static DmaConfiguration ones(Index n) { return DmaConfiguration(std::vector<std::uint8_t>(n, 1)); }

  // Parses "0110..." strings.
  static DmaConfiguration from_string(const std::string& s) {
    std::vector<std::uint8_t> bits;
    bits.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw ArgumentError("DmaConfiguration: invalid character '" + std::string(1, c) + "'");
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return DmaConfiguration(std::move(bits));
  }

  Index size() const { return static_cast<Index>(bits_.size()); }
  bool operator[](Index i) const { return bits_[static_cast<std::size_t>(i)] != 0; }
  void flip(Index i) { bits_[static_cast<std::size_t>(i)] ^= 1U; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::string to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
  }

  friend bool operator==(const DmaConfiguration&, const DmaConfiguration&) = default;
  friend auto operator<=>(const DmaConfiguration&, const DmaConfiguration&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// Reflection coefficients of the element loads for one configuration.
struct LoadVector {
  ComplexVector r;
};

// The quantities assumed known in every problem type: load states and coupling.
struct HardwareModel {
  ComplexMatrix Gamma;
  Complex alpha{0.0, 0.0};
  Complex beta{1.0, 0.0};

  Index n_m() const { return Gamma.rows(); }
};

struct SystemParameters {
  ComplexMatrix H0;     // N_U x N_F
  ComplexMatrix A;      // N_U x N_M
  ComplexMatrix Gamma;  // N_M x N_M
  ComplexMatrix B;      // N_M x N_F
  Complex alpha{0.0, 0.0};
  Complex beta{1.0, 0.0};

  Index n_u() const { return H0.rows(); }
  Index n_f() const { return H0.cols(); }
  Index n_m() const { return Gamma.rows(); }

  HardwareModel hardware() const { return {Gamma, alpha, beta}; }

  // Shapes agree and Gamma is symmetric.
  void validate() const {
    const Index nu = n_u(), nf = n_f(), nm = n_m();
    if (nu < 1 || nf < 1 || nm < 1) throw ArgumentError("SystemParameters: empty dimension");
    if (A.rows() != nu || A.cols() != nm) throw ArgumentError("SystemParameters: A must be N_U x N_M");
    if (B.rows() != nm || B.cols() != nf) throw ArgumentError("SystemParameters: B must be N_M x N_F");
    if (Gamma.cols() != nm) throw ArgumentError("SystemParameters: Gamma must be square");
    const double asym = (Gamma - Gamma.transpose()).norm() / std::max(1.0, Gamma.norm());
    if (asym > 1e-12) throw PreconditionError("SystemParameters: Gamma is not symmetric (reciprocity)");
  }
};

inline LoadVector encode(const DmaConfiguration& v, Complex alpha, Complex beta) {
  LoadVector out{ComplexVector(v.size())};
  for (Index i = 0; i < v.size(); ++i) out.r(i) = v[i] ? beta : alpha;
  return out;
}

// Omega = (I - diag(r) Gamma)^-1 diag(r). Throws SingularityError when the
// estimated condition number of I - diag(r) Gamma exceeds kMaxCouplingCondition.
inline ComplexMatrix omega(const LoadVector& load, const ComplexMatrix& gamma) {
  const Index n = load.r.size();
  if (gamma.rows() != n || gamma.cols() != n)
    throw ArgumentError("omega: Gamma must be " + std::to_string(n) + "x" + std::to_string(n));
  ComplexMatrix system = ComplexMatrix::Identity(n, n) - load.r.asDiagonal() * gamma;
  Eigen::PartialPivLU<ComplexMatrix> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kMaxCouplingCondition)) {
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    throw SingularityError("omega: I - Phi*Gamma is numerically singular (condition ~ " + std::to_string(cond) + ")",
                           cond);
  }
  return lu.solve(ComplexMatrix(load.r.asDiagonal()));
}

inline ComplexMatrix omega(const HardwareModel& hw, const DmaConfiguration& v) {
  return omega(encode(v, hw.alpha, hw.beta), hw.Gamma);
}

inline void check_configuration(const SystemParameters& p, const DmaConfiguration& v) {
  if (v.size() != p.n_m())
    throw ArgumentError("configuration has " + std::to_string(v.size()) + " bits, model has N_M = " +
                        std::to_string(p.n_m()));
}

inline ComplexMatrix end_to_end(const SystemParameters& p, const DmaConfiguration& v) {
  check_configuration(p, v);
  return p.H0 + p.A * omega(encode(v, p.alpha, p.beta), p.Gamma) * p.B;
}

// Same as end_to_end with Gamma forced to zero.
inline ComplexMatrix end_to_end_no_mc(const SystemParameters& p, const DmaConfiguration& v) {
  check_configuration(p, v);
  return p.H0 + p.A * encode(v, p.alpha, p.beta).r.asDiagonal() * p.B;
}

// Rejects hardware for which either uniform configuration (all alpha, all
// beta) is ill-conditioned.
inline void check_admissible(const HardwareModel& hw) {
  const Index n = hw.n_m();
  omega(hw, DmaConfiguration::zeros(n));
  omega(hw, DmaConfiguration::ones(n));
}

// blkdiag(I_{n_f}, Omega)
inline ComplexMatrix augment_omega(const ComplexMatrix& om, Index n_f) {
  const Index n = n_f + om.rows();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  out.topLeftCorner(n_f, n_f).setIdentity();
  out.bottomRightCorner(om.rows(), om.cols()) = om;
  return out;
}

struct OmegaStacks {
  Tensor3 plain;      // N_M x N_M x K, slices Omega_k
  Tensor3 augmented;  // (N_F+N_M) x (N_F+N_M) x K, slices blkdiag(I, Omega_k); empty when n_f == 0
};

// Both stacks come from the same per-configuration Omega_k.
inline OmegaStacks build_omega_stacks(const HardwareModel& hw, const std::vector<DmaConfiguration>& configs,
                                      Index n_f = 0) {
  if (configs.empty()) throw ArgumentError("build_omega_stacks: need at least one configuration");
  const Index n = hw.n_m();
  const auto K = static_cast<Index>(configs.size());
  OmegaStacks out{Tensor3(n, n, K), n_f > 0 ? Tensor3(n_f + n, n_f + n, K) : Tensor3()};
  for (Index k = 0; k < K; ++k) {
    const auto& v = configs[static_cast<std::size_t>(k)];
    if (v.size() != n)
      throw ArgumentError("build_omega_stacks: configuration " + std::to_string(k) + " has wrong length");
    ComplexMatrix om;
    try {
      om = omega(hw, v);
    } catch (const SingularityError& e) {
      throw SingularityError(std::string(e.what()) + " at configuration " + std::to_string(k), e.condition(), k);
    }
    out.plain.set_slice(k, om);
    if (n_f > 0) out.augmented.set_slice(k, augment_omega(om, n_f));
  }
  return out;
}

inline Tensor3 build_omega_stack(const HardwareModel& hw, const std::vector<DmaConfiguration>& configs) {
  return build_omega_stacks(hw, configs).plain;
}

// Full scattering matrix of the static structure with its port partition.
struct ScatteringMatrix {
  ComplexMatrix S;
  std::vector<Index> feeds;
  std::vector<Index> elements;
  std::vector<Index> users;

  void validate() const {
    const Index n = S.rows();
    if (S.cols() != n) throw ArgumentError("ScatteringMatrix: S must be square");
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (const auto* set : {&feeds, &elements, &users})
      for (Index i : *set) {
        if (i < 0 || i >= n) throw ArgumentError("ScatteringMatrix: port index out of range");
        ++seen[static_cast<std::size_t>(i)];
      }
    for (int c : seen)
      if (c != 1) throw ArgumentError("ScatteringMatrix: port sets must be disjoint and cover all ports");
  }

  ComplexMatrix block(const std::vector<Index>& rows, const std::vector<Index>& cols) const {
    return S(rows, cols);
  }
};

// Assembles a reciprocal S from model parameters. S_FF and S_UU are taken as
// given (zero by default). Ports are ordered feeds, elements, users.
inline ScatteringMatrix assemble_scattering(const SystemParameters& p, const ComplexMatrix& s_ff = {},
                                            const ComplexMatrix& s_uu = {}) {
  const Index nf = p.n_f(), nm = p.n_m(), nu = p.n_u();
  ScatteringMatrix sm;
  sm.S = ComplexMatrix::Zero(nf + nm + nu, nf + nm + nu);
  if (s_ff.size() > 0) sm.S.topLeftCorner(nf, nf) = s_ff;
  if (s_uu.size() > 0) sm.S.bottomRightCorner(nu, nu) = s_uu;
  sm.S.block(nf, nf, nm, nm) = p.Gamma;
  sm.S.block(nf, 0, nm, nf) = p.B;
  sm.S.block(0, nf, nf, nm) = p.B.transpose();
  sm.S.block(nf + nm, 0, nu, nf) = p.H0;
  sm.S.block(0, nf + nm, nf, nu) = p.H0.transpose();
  sm.S.block(nf + nm, nf, nu, nm) = p.A;
  sm.S.block(nf, nf + nm, nm, nu) = p.A.transpose();
  for (Index i = 0; i < nf; ++i) sm.feeds.push_back(i);
  for (Index i = 0; i < nm; ++i) sm.elements.push_back(nf + i);
  for (Index i = 0; i < nu; ++i) sm.users.push_back(nf + nm + i);
  return sm;
}

// Effective coupling when the feeds in open_feeds are open-circuited
// (reflection coefficient +1):
//   Gamma_eff = S_MM + S_{M,oc} (I - S_{oc,oc})^-1 S_{oc,M}
inline ComplexMatrix reduce_open_ports(const ScatteringMatrix& s, const std::vector<Index>& active_feeds,
                                       const std::vector<Index>& open_feeds) {
  s.validate();
  std::vector<Index> all(active_feeds);
  all.insert(all.end(), open_feeds.begin(), open_feeds.end());
  std::vector<Index> expected(s.feeds);
  std::sort(all.begin(), all.end());
  std::sort(expected.begin(), expected.end());
  if (all != expected || std::adjacent_find(all.begin(), all.end()) != all.end())
    throw ArgumentError("reduce_open_ports: active and open feeds must partition the feed ports");

  ComplexMatrix gamma = s.block(s.elements, s.elements);
  if (open_feeds.empty()) return gamma;
  const auto n_oc = static_cast<Index>(open_feeds.size());
  const ComplexMatrix system = ComplexMatrix::Identity(n_oc, n_oc) - s.block(open_feeds, open_feeds);
  Eigen::PartialPivLU<ComplexMatrix> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kMaxCouplingCondition)) {
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    throw SingularityError("reduce_open_ports: I - S_oc,oc is numerically singular", cond);
  }
  gamma += s.block(s.elements, open_feeds) * lu.solve(s.block(open_feeds, s.elements));
  return gamma;
}

}  // namespace dmace

#endif  // DMACE_MNT_MODEL_HPP
