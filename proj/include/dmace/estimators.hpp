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
// Mutual-coupling-aware channel estimators for H_k = H0 + A Omega_k B with
// known Omega_k.
//
//   problem type   known        estimated      estimator
//   1              -            H0, A, B       btals1 (block Tucker ALS)
//   2              H0           A, B           btals2, rbf
//   3              B            H0, A          btals3 (zero forcing)
//   4              H0, B        A              btals4 (zero forcing)
//
// Types 1 and 3 work on the augmented core tensor with slices
// blkdiag(I_{N_F}, Omega_k), so H_k = C blkdiag(I, Omega_k) D with
// C = [H0, A] and D = [I; B]. Types 2 and 4 take the measurements with H0
// already subtracted and the plain core tensor.
//
// Whenever both A and B are estimated, they are only determined up to
// (A, B) -> (g A, B / g); predictions are unaffected.

#ifndef DMACE_ESTIMATORS_HPP
#define DMACE_ESTIMATORS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dmace/errors.hpp"
#include "dmace/mnt_model.hpp"
#include "dmace/tensor.hpp"

namespace dmace {

enum class ProblemType { type1, type2, type3, type4, rbf };

inline std::string to_string(ProblemType t) {
  switch (t) {
    case ProblemType::type1: return "1";
    case ProblemType::type2: return "2";
    case ProblemType::type3: return "3";
    case ProblemType::type4: return "4";
    case ProblemType::rbf: return "rbf";
  }
  return "?";
}

inline std::string algorithm_name(ProblemType t) {
  switch (t) {
    case ProblemType::type1: return "BTALS-I";
    case ProblemType::type2: return "BTALS-II";
    case ProblemType::type3: return "BTALS-III";
    case ProblemType::type4: return "BTALS-IV";
    case ProblemType::rbf: return "RBF";
  }
  return "?";
}

// Accepts "1".."4", "rbf" and the algorithm names ("btals1", "BTALS-II", ...).
inline ProblemType parse_problem_type(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::erase(s, '-');
  if (s == "1" || s == "btals1" || s == "btalsi") return ProblemType::type1;
  if (s == "2" || s == "btals2" || s == "btalsii") return ProblemType::type2;
  if (s == "3" || s == "btals3" || s == "btalsiii") return ProblemType::type3;
  if (s == "4" || s == "btals4" || s == "btalsiv") return ProblemType::type4;
  if (s == "rbf") return ProblemType::rbf;
  throw ArgumentError("unknown problem type '" + s + "'");
}

inline bool needs_known_h0(ProblemType t) {
  return t == ProblemType::type2 || t == ProblemType::type4 || t == ProblemType::rbf;
}
inline bool needs_known_b(ProblemType t) { return t == ProblemType::type3 || t == ProblemType::type4; }

namespace detail {
inline Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }
}  // namespace detail

// Smallest K meeting the necessary dimensional condition of each estimator.
inline Index min_k(ProblemType t, Index n_f, Index n_m, Index n_u) {
  if (n_f < 1 || n_m < 1 || n_u < 1) throw ArgumentError("min_k: dimensions must be positive");
  using detail::ceil_div;
  switch (t) {
    case ProblemType::type1: return std::max(1 + ceil_div(n_m, n_f), ceil_div(n_f + n_m, n_u));
    case ProblemType::type2: return std::max(ceil_div(n_m, n_u), ceil_div(n_m, n_f));
    case ProblemType::type3: return 1 + ceil_div(n_m, n_f);
    case ProblemType::type4: return ceil_div(n_m, n_f);
    case ProblemType::rbf: return vech_size(n_m);
  }
  throw ArgumentError("min_k: unknown problem type");
}

enum class InitMode { random, provided };

struct EstimatorConfig {
  int max_iter = 200;
  double cost_tol = 1e-10;  // stop when the relative cost decrease falls below this
  double rank_tol = 1e-10;  // pseudoinverse cutoff relative to the largest singular value
  std::uint64_t init_seed = 0;
  InitMode init_mode = InitMode::random;
  std::optional<ComplexMatrix> initial_B;  // N_M x N_F, used with InitMode::provided
  double symmetry_tol = 1e-9;              // RBF: relative asymmetry allowed in Omega_k
  double gram_condition_guard = 1e12;      // RBF: above this, solve the normal system by pseudoinverse
  bool extrapolate = true;                 // BTALS-I/II: monotone line search along the last step
  double max_extrapolation = 64.0;
  int refine_max_iter = 100;             // BTALS-I/II: damped Gauss-Newton steps after the sweeps (0 disables)
  Index refine_max_parameters = 1500;    // skip the polish for larger models
  int starts = 4;                        // BTALS-I/II: random restarts, best final cost wins

  void validate() const {
    if (max_iter < 1) throw ArgumentError("EstimatorConfig: max_iter must be at least 1");
    if (starts < 1) throw ArgumentError("EstimatorConfig: starts must be at least 1");
    if (!(cost_tol > 0.0) || !(rank_tol > 0.0) || !(symmetry_tol > 0.0))
      throw ArgumentError("EstimatorConfig: tolerances must be positive");
    if (init_mode == InitMode::provided && !initial_B)
      throw ArgumentError("EstimatorConfig: init_mode=provided requires initial_B");
  }
};

struct EstimationReport {
  std::string algorithm;
  std::optional<ComplexMatrix> H0_hat;
  std::optional<ComplexMatrix> A_hat;
  std::optional<ComplexMatrix> B_hat;
  std::vector<double> cost_trace;  // squared Frobenius residual on the training tensor
  int iterations_used = 0;
  bool converged = false;
  Index min_k_required = 0;
  Index k_used = 0;
  // RBF diagnostics: relative residual left by the zero-forcing step, and
  // whether the normal-equation guard fell back to a pseudoinverse.
  std::optional<double> zero_forcing_residual;
  bool gram_fallback = false;
  int starts_used = 1;
};

namespace detail {

inline void check_k(ProblemType t, Index k, Index n_f, Index n_m, Index n_u) {
  const Index needed = min_k(t, n_f, n_m, n_u);
  if (k < needed)
    throw IdentifiabilityError(algorithm_name(t) + ": K = " + std::to_string(k) + " is below K_min = " +
                                   std::to_string(needed),
                               k, needed);
}

// rhs * X^+, requiring X to have full row rank unless `strict` is false
// (minimum-norm solution).
inline ComplexMatrix solve_right(const ComplexMatrix& rhs, const ComplexMatrix& x, double rank_tol,
                                 const std::string& who, Index k, Index k_min, bool strict = true) {
  const auto p = pinv(x, rank_tol);
  if (strict && p.rank < x.rows())
    throw RankError(who + ": least-squares design matrix has numerical rank " + std::to_string(p.rank) + " < " +
                        std::to_string(x.rows()),
                    p.rank, x.rows(), k, k_min);
  return rhs * p.matrix;
}

inline void check_finite(double cost, const std::string& who, int iteration) {
  if (!std::isfinite(cost))
    throw DivergenceError(who + ": non-finite cost at iteration " + std::to_string(iteration));
}

// Relative-decrease stopping rule shared by the iterative estimators.
inline bool should_stop(const std::vector<double>& trace, double tol) {
  if (trace.size() < 2) return !trace.empty() && trace.back() == 0.0;
  const double prev = trace[trace.size() - 2];
  const double cur = trace.back();
  if (prev == 0.0 || cur == 0.0) return true;
  return (prev - cur) / prev < tol;
}

inline ComplexMatrix initial_feed_channel(const EstimatorConfig& cfg, Index n_m, Index n_f) {
  if (cfg.init_mode == InitMode::provided) {
    if (cfg.initial_B->rows() != n_m || cfg.initial_B->cols() != n_f)
      throw ArgumentError("EstimatorConfig: initial_B must be N_M x N_F");
    return *cfg.initial_B;
  }
  std::mt19937_64 rng(cfg.init_seed);
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  ComplexMatrix b(n_m, n_f);
  for (Index j = 0; j < n_f; ++j)
    for (Index i = 0; i < n_m; ++i) {
      const double re = n(rng);
      const double im = n(rng);
      b(i, j) = Complex(re, im);
    }
  return b;
}

inline void check_augmented(const Tensor3& t_bar, Index n_f) {
  const Index n = t_bar.dim1();
  if (t_bar.dim2() != n || n <= n_f) throw ArgumentError("augmented core tensor must be (N_F+N_M) x (N_F+N_M) x K");
  for (Index k = 0; k < t_bar.dim3(); ++k) {
    const auto s = t_bar.slice(k);
    const Index m = n - n_f;
    const bool ok = (s.topLeftCorner(n_f, n_f) - ComplexMatrix::Identity(n_f, n_f)).cwiseAbs().maxCoeff() <= 1e-12 &&
                    s.topRightCorner(n_f, m).cwiseAbs().maxCoeff() <= 1e-12 &&
                    s.bottomLeftCorner(m, n_f).cwiseAbs().maxCoeff() <= 1e-12;
    if (!ok)
      throw PreconditionError("augmented core slice " + std::to_string(k) + " is not blkdiag(I_{N_F}, Omega_k)");
  }
}

inline void check_same_k(const Tensor3& h, const Tensor3& t) {
  if (h.dim3() != t.dim3())
    throw ArgumentError("channel tensor has K = " + std::to_string(h.dim3()) + " slices, core tensor has " +
                        std::to_string(t.dim3()));
  if (h.dim3() < 1) throw ArgumentError("need at least one measurement");
}

}  // namespace detail

namespace detail {

struct Tucker2Factors {
  ComplexMatrix left;     // C (type 1) or A (type 2)
  ComplexMatrix right_t;  // D^T (type 1) or B^T (type 2)
};

// Alternating LS for H_k = L core_k R^T. The first `pinned` columns of R^T
// are held at the identity and the remaining ones solved with that
// constraint in place. Optionally, after each sweep the right factor is
// pushed further along its last ALS step; the move is kept only if the cost
// after re-solving the left factor drops, so the trace stays monotone.
inline Tucker2Factors tucker2_als(const Tensor3& h, const Tensor3& core, ComplexMatrix right_t, Index pinned,
                                  const EstimatorConfig& cfg, EstimationReport& rep, Index k_min) {
  const Index k = h.dim3();
  const ComplexMatrix h1 = unfold(h, 1);
  const ComplexMatrix h2 = unfold(h, 2);
  // Identifiability is judged on the generic starting point; later iterates
  // may pass through rank-deficient designs without the problem being
  // unidentifiable, so those steps fall back to the minimum-norm solution.
  bool strict = true;
  auto left_step = [&](const ComplexMatrix& r_t, double& cost) {
    const ComplexMatrix x = unfold(mode_n_product(core, r_t, 2), 1);
    ComplexMatrix l = solve_right(h1, x, cfg.rank_tol, rep.algorithm, k, k_min, strict);
    cost = (h1 - l * x).squaredNorm();
    return l;
  };

  ComplexMatrix left;
  ComplexMatrix prev_right_t;
  double step = 1.0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    double unused = 0.0;
    left = left_step(right_t, unused);
    const ComplexMatrix x = unfold(mode_n_product(core, left, 1), 2);
    if (pinned > 0) {
      const Index free = x.rows() - pinned;
      right_t.rightCols(free) =
          solve_right(h2 - x.topRows(pinned), x.bottomRows(free), cfg.rank_tol, rep.algorithm, k, k_min, strict);
    } else {
      right_t = solve_right(h2, x, cfg.rank_tol, rep.algorithm, k, k_min, strict);
    }
    strict = false;

    double cost = (h2 - right_t * x).squaredNorm();
    check_finite(cost, rep.algorithm, it);

    if (cfg.extrapolate && it > 1) {
      const ComplexMatrix als_right_t = right_t;
      const ComplexMatrix trial = right_t + step * (right_t - prev_right_t);
      try {
        double trial_cost = 0.0;
        ComplexMatrix trial_left = left_step(trial, trial_cost);
        if (std::isfinite(trial_cost) && trial_cost < cost) {
          right_t = trial;
          left = std::move(trial_left);
          cost = trial_cost;
          step = std::min(2.0 * step, cfg.max_extrapolation);
        } else {
          step = 1.0;
        }
      } catch (const Error&) {
        step = 1.0;
      }
      prev_right_t = als_right_t;
    } else {
      prev_right_t = right_t;
    }

    rep.cost_trace.push_back(cost);
    rep.iterations_used = it;
    if (should_stop(rep.cost_trace, cfg.cost_tol)) {
      rep.converged = true;
      break;
    }
  }
  return {std::move(left), std::move(right_t)};
}

// Levenberg-Marquardt polish of the same model, run after the alternating
// sweeps. The residual is holomorphic in (L, free part of R), so complex
// Gauss-Newton steps apply directly. Only cost-reducing steps are kept.
inline void tucker2_refine(const Tensor3& h, const Tensor3& core, Tucker2Factors& f, Index pinned,
                           const EstimatorConfig& cfg, EstimationReport& rep) {
  const Index n_u = h.dim1(), n_f = h.dim2(), k = h.dim3(), n_l = core.dim1();
  const Index free = n_l - pinned;
  const Index n_left = n_u * n_l, n_right = free * n_f, n_par = n_left + n_right;
  if (n_par > cfg.refine_max_parameters || rep.cost_trace.empty()) return;

  auto residual = [&](const ComplexMatrix& l, const ComplexMatrix& r_t) {
    ComplexVector r(n_u * n_f * k);
    for (Index kk = 0; kk < k; ++kk)
      r.segment(kk * n_u * n_f, n_u * n_f) = (h.slice(kk) - l * core.slice(kk) * r_t.transpose()).reshaped();
    return r;
  };

  double cost = rep.cost_trace.back();
  double lambda = 1e-3;
  const Eigen::MatrixXcd id_nf = Eigen::MatrixXcd::Identity(n_f, n_f);
  const Eigen::MatrixXcd id_nu = Eigen::MatrixXcd::Identity(n_u, n_u);
  for (int it = 1; it <= cfg.refine_max_iter && cost > 0.0; ++it) {
    ComplexMatrix jac(n_u * n_f * k, n_par);
    for (Index kk = 0; kk < k; ++kk) {
      const ComplexMatrix sd = core.slice(kk) * f.right_t.transpose();  // n_l x n_f
      const ComplexMatrix ls = f.left * core.slice(kk).rightCols(free);  // n_u x free
      jac.block(kk * n_u * n_f, 0, n_u * n_f, n_left) = kron(sd.transpose(), id_nu);
      jac.block(kk * n_u * n_f, n_left, n_u * n_f, n_right) = kron(id_nf, ls);
    }
    const ComplexVector r = residual(f.left, f.right_t);
    const ComplexMatrix normal = jac.adjoint() * jac;
    const ComplexVector grad = jac.adjoint() * r;
    const Eigen::VectorXd diag = normal.diagonal().real();
    const double floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);

    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      ComplexMatrix damped = normal;
      for (Index i = 0; i < n_par; ++i) damped(i, i) += lambda * std::max(diag(i), floor);
      const ComplexVector delta = damped.ldlt().solve(grad);
      ComplexMatrix l = f.left + delta.head(n_left).reshaped(n_u, n_l);
      ComplexMatrix r_t = f.right_t;
      // B (free x n_f) is stored transposed in r_t
      r_t.rightCols(free) += delta.tail(n_right).reshaped(free, n_f).transpose();
      const double trial = residual(l, r_t).squaredNorm();
      if (std::isfinite(trial) && trial < cost) {
        f.left = std::move(l);
        f.right_t = std::move(r_t);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        rep.cost_trace.push_back(trial);
        rep.iterations_used += 1;
        const double prev = cost;
        cost = trial;
        if ((prev - cost) / prev < cfg.cost_tol) {
          rep.converged = true;
          return;
        }
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) {
      // no descent direction left at working precision
      rep.converged = true;
      return;
    }
  }
}

inline std::uint64_t start_seed(std::uint64_t base, int start) {
  if (start == 0) return base;
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(start);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Runs sweeps plus polish from cfg.starts random initial B and keeps the run
// with the lowest final cost. An essentially exact fit ends the search early.
inline Tucker2Factors tucker2_fit(const Tensor3& h, const Tensor3& core, Index pinned, const EstimatorConfig& cfg,
                                  EstimationReport& rep, Index k_min) {
  const Index n_f = h.dim2(), n_l = core.dim1(), n_m = n_l - pinned;
  const double exact = 1e-24 * h.squared_norm();
  std::optional<Tucker2Factors> best;
  EstimationReport best_rep;
  for (int start = 0; start < cfg.starts; ++start) {
    EstimatorConfig c = cfg;
    if (start > 0) {
      c.init_mode = InitMode::random;
      c.init_seed = start_seed(cfg.init_seed, start);
    }
    ComplexMatrix right_t(n_f, n_l);
    if (pinned > 0) right_t.leftCols(pinned).setIdentity();
    right_t.rightCols(n_m) = initial_feed_channel(c, n_m, n_f).transpose();
    EstimationReport trial = rep;
    auto f = tucker2_als(h, core, std::move(right_t), pinned, c, trial, k_min);
    tucker2_refine(h, core, f, pinned, c, trial);
    if (!best || trial.cost_trace.back() < best_rep.cost_trace.back()) {
      best = std::move(f);
      best_rep = std::move(trial);
    }
    best_rep.starts_used = start + 1;
    if (best_rep.cost_trace.back() <= exact) break;
  }
  rep = std::move(best_rep);
  return std::move(*best);
}

}  // namespace detail

// Type 1: alternating LS for C = [H0, A] and D^T = [I, B^T]. After each D
// update the leading N_F x N_F block of D^T is reset to the identity and the
// cost is evaluated on that constrained iterate.
inline EstimationReport btals1(const Tensor3& h, const Tensor3& t_bar, const EstimatorConfig& cfg = {}) {
  cfg.validate();
  detail::check_same_k(h, t_bar);
  const Index n_u = h.dim1(), n_f = h.dim2(), k = h.dim3();
  detail::check_augmented(t_bar, n_f);
  const Index n_m = t_bar.dim1() - n_f;
  const ProblemType type = ProblemType::type1;
  detail::check_k(type, k, n_f, n_m, n_u);
  const Index k_min = min_k(type, n_f, n_m, n_u);

  EstimationReport rep;
  rep.algorithm = algorithm_name(type);
  rep.min_k_required = k_min;
  rep.k_used = k;

  const auto f = detail::tucker2_fit(h, t_bar, n_f, cfg, rep, k_min);
  rep.H0_hat = f.left.leftCols(n_f);
  rep.A_hat = f.left.rightCols(n_m);
  rep.B_hat = f.right_t.rightCols(n_m).transpose();
  return rep;
}

// Type 2: alternating LS for A and B^T on H_k - H0.
inline EstimationReport btals2(const Tensor3& h_ring, const Tensor3& t, const EstimatorConfig& cfg = {}) {
  cfg.validate();
  detail::check_same_k(h_ring, t);
  const Index n_u = h_ring.dim1(), n_f = h_ring.dim2(), k = h_ring.dim3(), n_m = t.dim1();
  if (t.dim2() != n_m) throw ArgumentError("btals2: core tensor slices must be square");
  const ProblemType type = ProblemType::type2;
  detail::check_k(type, k, n_f, n_m, n_u);
  const Index k_min = min_k(type, n_f, n_m, n_u);

  EstimationReport rep;
  rep.algorithm = algorithm_name(type);
  rep.min_k_required = k_min;
  rep.k_used = k;

  const auto f = detail::tucker2_fit(h_ring, t, 0, cfg, rep, k_min);
  rep.A_hat = f.left;
  rep.B_hat = f.right_t.transpose();
  return rep;
}

// Type 3: one zero-forcing solve for C = [H0, A] with D = [I; B] fixed.
inline EstimationReport btals3(const Tensor3& h, const Tensor3& t_bar, const ComplexMatrix& b_known,
                               const EstimatorConfig& cfg = {}) {
  cfg.validate();
  detail::check_same_k(h, t_bar);
  const Index n_u = h.dim1(), n_f = h.dim2(), k = h.dim3();
  detail::check_augmented(t_bar, n_f);
  const Index n_m = t_bar.dim1() - n_f;
  if (b_known.rows() != n_m || b_known.cols() != n_f) throw ArgumentError("btals3: B must be N_M x N_F");
  const ProblemType type = ProblemType::type3;
  detail::check_k(type, k, n_f, n_m, n_u);
  const Index k_min = min_k(type, n_f, n_m, n_u);

  EstimationReport rep;
  rep.algorithm = algorithm_name(type);
  rep.min_k_required = k_min;
  rep.k_used = k;

  ComplexMatrix d_t(n_f, n_f + n_m);
  d_t.leftCols(n_f).setIdentity();
  d_t.rightCols(n_m) = b_known.transpose();
  const ComplexMatrix h1 = unfold(h, 1);
  const ComplexMatrix x_c = unfold(mode_n_product(t_bar, d_t, 2), 1);
  const ComplexMatrix c = detail::solve_right(h1, x_c, cfg.rank_tol, rep.algorithm, k, k_min);
  rep.cost_trace.push_back((h1 - c * x_c).squaredNorm());
  detail::check_finite(rep.cost_trace.back(), rep.algorithm, 1);
  rep.iterations_used = 1;
  rep.converged = true;
  rep.H0_hat = c.leftCols(n_f);
  rep.A_hat = c.rightCols(n_m);
  return rep;
}

// Type 4: one zero-forcing solve for A on H_k - H0 with B fixed.
inline EstimationReport btals4(const Tensor3& h_ring, const Tensor3& t, const ComplexMatrix& b_known,
                               const EstimatorConfig& cfg = {}) {
  cfg.validate();
  detail::check_same_k(h_ring, t);
  const Index n_u = h_ring.dim1(), n_f = h_ring.dim2(), k = h_ring.dim3(), n_m = t.dim1();
  if (t.dim2() != n_m) throw ArgumentError("btals4: core tensor slices must be square");
  if (b_known.rows() != n_m || b_known.cols() != n_f) throw ArgumentError("btals4: B must be N_M x N_F");
  const ProblemType type = ProblemType::type4;
  detail::check_k(type, k, n_f, n_m, n_u);
  const Index k_min = min_k(type, n_f, n_m, n_u);

  EstimationReport rep;
  rep.algorithm = algorithm_name(type);
  rep.min_k_required = k_min;
  rep.k_used = k;

  const ComplexMatrix h1 = unfold(h_ring, 1);
  const ComplexMatrix x_a = unfold(mode_n_product(t, b_known.transpose(), 2), 1);
  const ComplexMatrix a = detail::solve_right(h1, x_a, cfg.rank_tol, rep.algorithm, k, k_min);
  rep.cost_trace.push_back((h1 - a * x_a).squaredNorm());
  detail::check_finite(rep.cost_trace.back(), rep.algorithm, 1);
  rep.iterations_used = 1;
  rep.converged = true;
  rep.A_hat = a;
  return rep;
}

// Blocks of the zero-forced, permuted matrix used by RBF.
// diag[i] ~ a_i b_i^T; pair[p] ~ a_j b_i^T + a_i b_j^T for the p-th entry of
// strict_lower_pairs(N_M). observed[p] is false when the corresponding row of
// the vech core matrix is identically zero (e.g. no coupling), in which case
// the block carries no information and is left out of the objective.
struct RbfBlocks {
  std::vector<ComplexMatrix> diag;
  std::vector<ComplexMatrix> pair;
  std::vector<bool> observed;
  std::vector<std::pair<Index, Index>> pairs;
  double zero_forcing_residual = 0.0;  // ||H3^T - Z S||_F^2 / ||H3^T||_F^2
};

// Zero-forcing stage: vech core matrix S (N_M(N_M+1)/2 x K), then
// Z = H_(3)^T S^+ and the column permutation that lists diagonal terms first.
inline RbfBlocks rbf_zero_forcing(const Tensor3& h_ring, const Tensor3& t, const EstimatorConfig& cfg, Index k_min) {
  const Index n_u = h_ring.dim1(), n_f = h_ring.dim2(), k = h_ring.dim3(), n_m = t.dim1();
  const Index l = vech_size(n_m);
  ComplexMatrix s(l, k);
  for (Index kk = 0; kk < k; ++kk) s.col(kk) = vech(ComplexMatrix(t.slice(kk)));

  const double scale = s.cwiseAbs().maxCoeff();
  std::vector<bool> row_observed(static_cast<std::size_t>(l));
  // Diagonal rows are always required: an element that is never loaded
  // leaves its (a_i, b_i) undetermined.
  Index required = n_m;
  for (Index r = 0; r < l; ++r) row_observed[static_cast<std::size_t>(r)] = s.row(r).cwiseAbs().maxCoeff() > 1e-15 * scale;
  for (const auto& [i, j] : strict_lower_pairs(n_m))
    required += row_observed[static_cast<std::size_t>(vech_index(i, j, n_m))] ? 1 : 0;
  const auto p = pinv(s, cfg.rank_tol);
  if (p.rank < required)
    throw RankError("RBF: vech core matrix has numerical rank " + std::to_string(p.rank) + " < " +
                        std::to_string(required),
                    p.rank, required, k, k_min);

  const ComplexMatrix h3t = unfold(h_ring, 3).transpose();
  const ComplexMatrix z = h3t * p.matrix;
  RbfBlocks out;
  const double energy = h3t.squaredNorm();
  out.zero_forcing_residual = energy > 0.0 ? (h3t - z * s).squaredNorm() / energy : 0.0;
  out.pairs = strict_lower_pairs(n_m);
  for (Index i = 0; i < n_m; ++i) out.diag.push_back(z.col(vech_index(i, i, n_m)).reshaped(n_u, n_f));
  for (const auto& [i, j] : out.pairs) {
    const Index c = vech_index(i, j, n_m);
    out.pair.push_back(z.col(c).reshaped(n_u, n_f));
    out.observed.push_back(row_observed[static_cast<std::size_t>(c)]);
  }
  return out;
}

// Normal matrix G_X of the RBF update (diagonal: sum of squared column norms
// over the terms that involve column i; off-diagonal: x_j^H x_i).
inline ComplexMatrix rbf_gram(const ComplexMatrix& x, const std::vector<std::pair<Index, Index>>& pairs,
                              const std::vector<bool>& observed) {
  const Index n = x.cols();
  ComplexMatrix g = ComplexMatrix::Zero(n, n);
  const Eigen::VectorXd norms = x.colwise().squaredNorm().transpose();
  for (Index i = 0; i < n; ++i) g(i, i) = norms(i);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (!observed[p]) continue;
    const auto [i, j] = pairs[p];
    g(i, i) += norms(j);
    g(j, j) += norms(i);
    g(i, j) = x.col(j).dot(x.col(i));
    g(j, i) = x.col(i).dot(x.col(j));
  }
  return g;
}

namespace detail {

// One half-step of RBF: given X (d_X x N_M), returns Y^T (N_M x d_Y) solving
// G_X Y^T = R_Y^T. `blocks` are oriented so that block_ii ~ x_i y_i^T.
inline ComplexMatrix rbf_update(const ComplexMatrix& x, const std::vector<ComplexMatrix>& diag,
                                const std::vector<ComplexMatrix>& pair, const RbfBlocks& meta,
                                double cond_guard, bool& fallback) {
  const Index n = x.cols();
  const Index d_y = diag.front().cols();
  ComplexMatrix r_t(n, d_y);
  for (Index i = 0; i < n; ++i) r_t.row(i) = x.col(i).adjoint() * diag[static_cast<std::size_t>(i)];
  for (std::size_t p = 0; p < meta.pairs.size(); ++p) {
    if (!meta.observed[p]) continue;
    const auto [i, j] = meta.pairs[p];  // i > j
    r_t.row(i) += x.col(j).adjoint() * pair[p];
    r_t.row(j) += x.col(i).adjoint() * pair[p];
  }
  const ComplexMatrix g = rbf_gram(x, meta.pairs, meta.observed);
  Eigen::JacobiSVD<ComplexMatrix> svd(g);
  const auto& sv = svd.singularValues();
  const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  if (cond > cond_guard) {
    fallback = true;
    return pinv(g).matrix * r_t;
  }
  return g.partialPivLu().solve(r_t);
}

inline double rbf_objective(const ComplexMatrix& a, const ComplexMatrix& b_t, const RbfBlocks& blocks) {
  double cost = 0.0;
  for (Index i = 0; i < a.cols(); ++i)
    cost += (blocks.diag[static_cast<std::size_t>(i)] - a.col(i) * b_t.col(i).transpose()).squaredNorm();
  for (std::size_t p = 0; p < blocks.pairs.size(); ++p) {
    if (!blocks.observed[p]) continue;
    const auto [i, j] = blocks.pairs[p];
    cost += (blocks.pair[p] - a.col(j) * b_t.col(i).transpose() - a.col(i) * b_t.col(j).transpose()).squaredNorm();
  }
  return cost;
}

inline double plain_residual(const Tensor3& h_ring, const Tensor3& t, const ComplexMatrix& a, const ComplexMatrix& b) {
  double cost = 0.0;
  for (Index k = 0; k < h_ring.dim3(); ++k) cost += (h_ring.slice(k) - a * t.slice(k) * b).squaredNorm();
  return cost;
}

}  // namespace detail

// Type 2 by reciprocity-aware bilinear factorization: zero-force through the
// symmetric vech basis, initialise each (a_i, b_i) from a rank-one SVD of the
// diagonal block, then alternate exact LS updates of B^T and A over the
// rank-one and rank-two blocks.
inline EstimationReport rbf(const Tensor3& h_ring, const Tensor3& t, const EstimatorConfig& cfg = {}) {
  cfg.validate();
  detail::check_same_k(h_ring, t);
  const Index n_u = h_ring.dim1(), n_f = h_ring.dim2(), k = h_ring.dim3(), n_m = t.dim1();
  if (t.dim2() != n_m) throw ArgumentError("rbf: core tensor slices must be square");
  const ProblemType type = ProblemType::rbf;
  detail::check_k(type, k, n_f, n_m, n_u);
  const Index k_min = min_k(type, n_f, n_m, n_u);
  for (Index kk = 0; kk < k; ++kk) {
    const auto s = t.slice(kk);
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > cfg.symmetry_tol * scale)
      throw PreconditionError("RBF: core slice " + std::to_string(kk) + " is not symmetric");
  }

  EstimationReport rep;
  rep.algorithm = algorithm_name(type);
  rep.min_k_required = k_min;
  rep.k_used = k;

  const RbfBlocks blocks = rbf_zero_forcing(h_ring, t, cfg, k_min);
  rep.zero_forcing_residual = blocks.zero_forcing_residual;

  ComplexMatrix a = ComplexMatrix::Zero(n_u, n_m);
  ComplexMatrix b_t = ComplexMatrix::Zero(n_f, n_m);
  for (Index i = 0; i < n_m; ++i) {
    Eigen::JacobiSVD<ComplexMatrix> svd(blocks.diag[static_cast<std::size_t>(i)],
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double root = std::sqrt(svd.singularValues()(0));
    ComplexVector ai = root * svd.matrixU().col(0);
    ComplexVector bi = root * svd.matrixV().col(0).conjugate();
    Index arg = 0;
    ai.cwiseAbs().maxCoeff(&arg);
    if (std::abs(ai(arg)) > 0.0) {
      const Complex phase = ai(arg) / std::abs(ai(arg));
      ai /= phase;
      bi *= phase;
    }
    a.col(i) = ai;
    b_t.col(i) = bi;
  }

  std::vector<ComplexMatrix> diag_t, pair_t;
  for (const auto& m : blocks.diag) diag_t.push_back(m.transpose());
  for (const auto& m : blocks.pair) pair_t.push_back(m.transpose());

  std::vector<double> objective{detail::rbf_objective(a, b_t, blocks)};
  for (int it = 1; it <= cfg.max_iter; ++it) {
    b_t = detail::rbf_update(a, blocks.diag, blocks.pair, blocks, cfg.gram_condition_guard, rep.gram_fallback)
              .transpose();
    a = detail::rbf_update(b_t, diag_t, pair_t, blocks, cfg.gram_condition_guard, rep.gram_fallback).transpose();

    objective.push_back(detail::rbf_objective(a, b_t, blocks));
    const double cost = detail::plain_residual(h_ring, t, a, b_t.transpose());
    detail::check_finite(cost, rep.algorithm, it);
    detail::check_finite(objective.back(), rep.algorithm, it);
    rep.cost_trace.push_back(cost);
    rep.iterations_used = it;
    if (detail::should_stop(objective, cfg.cost_tol)) {
      rep.converged = true;
      break;
    }
  }
  rep.A_hat = a;
  rep.B_hat = b_t.transpose();
  return rep;
}

// Channels assumed known (from prior calibration or a reference measurement).
struct KnownChannels {
  std::optional<ComplexMatrix> H0;
  std::optional<ComplexMatrix> B;
};

struct ChannelModel {
  ComplexMatrix H0;  // N_U x N_F
  ComplexMatrix A;   // N_U x N_M
  ComplexMatrix B;   // N_M x N_F
};

// Combines estimated and known fields. Estimated fields take precedence.
inline ChannelModel resolve_model(const EstimationReport& rep, const KnownChannels& known) {
  auto pick = [](const std::optional<ComplexMatrix>& est, const std::optional<ComplexMatrix>& fallback,
                 const char* name) -> ComplexMatrix {
    if (est) return *est;
    if (fallback) return *fallback;
    throw ArgumentError(std::string("predict: ") + name + " is neither estimated nor known");
  };
  ChannelModel m;
  m.H0 = pick(rep.H0_hat, known.H0, "H0");
  if (!rep.A_hat) throw ArgumentError("predict: report has no estimate of A");
  m.A = *rep.A_hat;
  m.B = pick(rep.B_hat, known.B, "B");
  if (m.A.cols() != m.B.rows() || m.H0.rows() != m.A.rows() || m.H0.cols() != m.B.cols())
    throw ArgumentError("predict: inconsistent parameter shapes");
  return m;
}

// H_k = H0 + A Omega_k B for every slice of the core stack. Accepts either the
// plain stack (N_M x N_M x K) or the augmented one ((N_F+N_M)^2 x K), in which
// case H_k = C Omega_bar_k D.
inline Tensor3 predict(const ChannelModel& m, const Tensor3& core) {
  const Index n_f = m.H0.cols(), n_m = m.A.cols();
  Tensor3 out(m.H0.rows(), n_f, core.dim3());
  if (core.dim1() == n_m && core.dim2() == n_m) {
    for (Index k = 0; k < core.dim3(); ++k) out.slice(k).noalias() = m.H0 + m.A * core.slice(k) * m.B;
  } else if (core.dim1() == n_f + n_m && core.dim2() == n_f + n_m) {
    ComplexMatrix c(m.H0.rows(), n_f + n_m), d(n_f + n_m, n_f);
    c << m.H0, m.A;
    d << ComplexMatrix::Identity(n_f, n_f), m.B;
    for (Index k = 0; k < core.dim3(); ++k) out.slice(k).noalias() = c * core.slice(k) * d;
  } else {
    throw ArgumentError("predict: core tensor does not match the model dimensions");
  }
  return out;
}

inline Tensor3 predict(const EstimationReport& rep, const KnownChannels& known, const Tensor3& core) {
  return predict(resolve_model(rep, known), core);
}

}  // namespace dmace

#endif  // DMACE_ESTIMATORS_HPP
