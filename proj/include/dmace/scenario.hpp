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
// Synthetic scenarios: seeded ground-truth parameters, random training
// configurations, noisy channel measurements and the dataset file format.
//
// Noise model: additive circularly-symmetric white Gaussian noise, scaled so
// that the total measured energy over the total noise energy equals the
// requested SNR in expectation (one global SNR per measurement set).
//
// Dataset file (UTF-8 JSON, "format": "dmace-dataset", "version": 1):
//   dims          {n_u, n_f, n_m, k}
//   alpha, beta   [re, im]
//   gamma         matrix (absent means no coupling)
//   feed_channel  matrix, optional prior knowledge of B
//   configs       k rows of n_m bits
//   layout        {reference, n_train, n_test}
//   H_meas        k blocks, each n_u*n_f [re, im] pairs in column-major order
//   snr_db        number or null
//   seeds         {scenario, configs, noise}
//   scenario_ref  string
//   ground_truth  optional {H0, A, B}, evaluation only
// Matrices are {rows, cols, data} with data column-major.

#ifndef DMACE_SCENARIO_HPP
#define DMACE_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dmace/errors.hpp"
#include "dmace/json_io.hpp"
#include "dmace/mnt_model.hpp"
#include "dmace/tensor.hpp"

namespace dmace {

inline constexpr int kDatasetVersion = 1;

struct ScenarioSpec {
  Index n_f = 1;
  Index n_m = 1;
  Index n_u = 1;
  double coupling_strength = 0.0;  // target ||Gamma||_2 * max(|alpha|, |beta|)
  std::optional<double> snr_db;    // nullopt: noiseless
  std::uint64_t seed = 0;
  Complex alpha{0.0, 0.0};
  Complex beta{1.0, 0.0};

  void validate() const {
    if (n_f < 1 || n_m < 1 || n_u < 1) throw ArgumentError("ScenarioSpec: dimensions must be positive");
    if (!(coupling_strength >= 0.0 && coupling_strength < 1.0))
      throw ArgumentError("ScenarioSpec: coupling_strength must lie in [0, 1)");
  }
};

struct MeasurementSet {
  std::vector<DmaConfiguration> configs;
  Tensor3 H_meas;  // N_U x N_F x K
  std::optional<double> snr_db;
  std::uint64_t noise_seed = 0;
  std::string scenario_ref;

  Index k() const { return static_cast<Index>(configs.size()); }
};

namespace detail {

inline Complex complex_gaussian(std::mt19937_64& rng, double variance = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline ComplexMatrix complex_gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols, double variance = 1.0) {
  ComplexMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = complex_gaussian(rng, variance);
  return m;
}

inline double spectral_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace detail

// H0, A, B i.i.d. CN(0, 1); Gamma a symmetrized Gaussian rescaled to the
// requested coupling strength. Deterministic in spec.seed.
inline SystemParameters generate_params(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SystemParameters p;
  p.alpha = spec.alpha;
  p.beta = spec.beta;
  p.H0 = detail::complex_gaussian_matrix(rng, spec.n_u, spec.n_f);
  p.A = detail::complex_gaussian_matrix(rng, spec.n_u, spec.n_m);
  p.B = detail::complex_gaussian_matrix(rng, spec.n_m, spec.n_f);
  const ComplexMatrix raw = detail::complex_gaussian_matrix(rng, spec.n_m, spec.n_m);
  if (spec.coupling_strength == 0.0) {
    p.Gamma = ComplexMatrix::Zero(spec.n_m, spec.n_m);
    return p;
  }
  const double load = std::max(std::abs(spec.alpha), std::abs(spec.beta));
  if (load == 0.0) throw ArgumentError("generate_params: alpha and beta are both zero");
  ComplexMatrix sym = 0.5 * (raw + raw.transpose());
  p.Gamma = sym * (spec.coupling_strength / (detail::spectral_norm(sym) * load));
  // exact symmetry after rescaling
  p.Gamma = (0.5 * (p.Gamma + p.Gamma.transpose())).eval();
  return p;
}

// Fair-coin configurations. With with_reference the first entry is the
// all-zeros reference configuration and k - 1 random ones follow.
inline std::vector<DmaConfiguration> sample_configs(Index n_m, Index k, std::uint64_t seed,
                                                    bool with_reference = false) {
  if (k < 1) throw ArgumentError("sample_configs: K must be at least 1");
  if (n_m < 1) throw ArgumentError("sample_configs: N_M must be positive");
  std::mt19937_64 rng(seed);
  std::vector<DmaConfiguration> out;
  out.reserve(static_cast<std::size_t>(k));
  if (with_reference) out.push_back(DmaConfiguration::zeros(n_m));
  while (static_cast<Index>(out.size()) < k) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_m));
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
    out.emplace_back(std::move(bits));
  }
  return out;
}

// Noiseless channels for each configuration.
inline Tensor3 forward_tensor(const SystemParameters& p, const std::vector<DmaConfiguration>& configs) {
  Tensor3 t(p.n_u(), p.n_f(), static_cast<Index>(configs.size()));
  for (std::size_t k = 0; k < configs.size(); ++k) {
    try {
      t.set_slice(static_cast<Index>(k), end_to_end(p, configs[k]));
    } catch (const SingularityError& e) {
      throw SingularityError(std::string(e.what()) + " at configuration " + std::to_string(k), e.condition(),
                             static_cast<long>(k));
    }
  }
  return t;
}

inline MeasurementSet measure(const SystemParameters& p, const std::vector<DmaConfiguration>& configs,
                              std::optional<double> snr_db, std::uint64_t noise_seed,
                              std::string scenario_ref = {}) {
  MeasurementSet ms;
  ms.configs = configs;
  ms.snr_db = snr_db;
  ms.noise_seed = noise_seed;
  ms.scenario_ref = std::move(scenario_ref);
  ms.H_meas = forward_tensor(p, configs);
  if (!snr_db) return ms;
  const auto count = static_cast<double>(ms.H_meas.dims().size());
  const double variance = ms.H_meas.squared_norm() / (count * std::pow(10.0, *snr_db / 10.0));
  std::mt19937_64 rng(noise_seed);
  for (Index k = 0; k < ms.H_meas.dim3(); ++k) {
    auto s = ms.H_meas.slice(k);
    for (Index j = 0; j < s.cols(); ++j)
      for (Index i = 0; i < s.rows(); ++i) s(i, j) += detail::complex_gaussian(rng, variance);
  }
  return ms;
}

// Which slices of a measurement set serve as reference, training and test.
struct DatasetLayout {
  bool reference = false;  // slice 0 is the all-zeros reference configuration
  Index n_train = 0;
  Index n_test = 0;
};

struct DatasetSeeds {
  std::uint64_t scenario = 0;
  std::uint64_t configs = 0;
  std::uint64_t noise = 0;
};

struct Dataset {
  MeasurementSet measurements;
  HardwareModel hardware;
  std::optional<ComplexMatrix> feed_channel;     // prior knowledge of B
  std::optional<SystemParameters> ground_truth;  // evaluation only
  DatasetLayout layout;
  DatasetSeeds seeds;

  Index n_u() const { return measurements.H_meas.dim1(); }
  Index n_f() const { return measurements.H_meas.dim2(); }
  Index n_m() const { return hardware.n_m(); }
};

inline json_io::Json dataset_to_json(const Dataset& ds) {
  using json_io::Json;
  using json_io::to_json;
  const auto& ms = ds.measurements;
  Json j;
  j["format"] = "dmace-dataset";
  j["version"] = kDatasetVersion;
  j["dims"] = {{"n_u", ds.n_u()}, {"n_f", ds.n_f()}, {"n_m", ds.n_m()}, {"k", ms.k()}};
  j["alpha"] = to_json(ds.hardware.alpha);
  j["beta"] = to_json(ds.hardware.beta);
  j["gamma"] = to_json(ds.hardware.Gamma);
  if (ds.feed_channel) j["feed_channel"] = to_json(*ds.feed_channel);
  Json configs = Json::array();
  for (const auto& v : ms.configs) configs.push_back(v.bits());
  j["configs"] = std::move(configs);
  j["layout"] = {{"reference", ds.layout.reference}, {"n_train", ds.layout.n_train}, {"n_test", ds.layout.n_test}};
  Json blocks = Json::array();
  for (Index k = 0; k < ms.H_meas.dim3(); ++k) {
    Json block = Json::array();
    const auto s = ms.H_meas.slice(k);
    for (Index c = 0; c < s.cols(); ++c)
      for (Index r = 0; r < s.rows(); ++r) block.push_back(to_json(s(r, c)));
    blocks.push_back(std::move(block));
  }
  j["H_meas"] = std::move(blocks);
  j["snr_db"] = ms.snr_db ? Json(*ms.snr_db) : Json(nullptr);
  j["seeds"] = {{"scenario", ds.seeds.scenario}, {"configs", ds.seeds.configs}, {"noise", ds.seeds.noise}};
  j["scenario_ref"] = ms.scenario_ref;
  if (ds.ground_truth) {
    j["ground_truth"] = {{"H0", to_json(ds.ground_truth->H0)},
                         {"A", to_json(ds.ground_truth->A)},
                         {"B", to_json(ds.ground_truth->B)}};
  }
  return j;
}

inline Dataset dataset_from_json(const json_io::Json& j) {
  using json_io::complex_from_json;
  using json_io::matrix_from_json;
  using json_io::require;
  try {
    const int version = require(j, "version", "").get<int>();
    if (version != kDatasetVersion)
      throw VersionError("dataset version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kDatasetVersion) + ")",
                         version, kDatasetVersion);
    const auto& dims = require(j, "dims", "");
    const auto n_u = require(dims, "n_u", "dims.").get<Index>();
    const auto n_f = require(dims, "n_f", "dims.").get<Index>();
    const auto n_m = require(dims, "n_m", "dims.").get<Index>();
    const auto k = require(dims, "k", "dims.").get<Index>();
    if (n_u < 1 || n_f < 1 || n_m < 1 || k < 0) throw ParseError("dims must be positive", 0);

    Dataset ds;
    ds.hardware.alpha = complex_from_json(require(j, "alpha", ""), "alpha");
    ds.hardware.beta = complex_from_json(require(j, "beta", ""), "beta");
    ds.hardware.Gamma = j.contains("gamma") ? matrix_from_json(j["gamma"], "gamma") : ComplexMatrix::Zero(n_m, n_m);
    if (ds.hardware.Gamma.rows() != n_m || ds.hardware.Gamma.cols() != n_m)
      throw ParseError("gamma must be n_m x n_m", 0);
    if (j.contains("feed_channel")) {
      ds.feed_channel = matrix_from_json(j["feed_channel"], "feed_channel");
      if (ds.feed_channel->rows() != n_m || ds.feed_channel->cols() != n_f)
        throw ParseError("feed_channel must be n_m x n_f", 0);
    }

    const auto& configs = require(j, "configs", "");
    if (!configs.is_array() || static_cast<Index>(configs.size()) != k)
      throw ParseError("configs must hold dims.k rows", 0);
    auto& ms = ds.measurements;
    for (const auto& row : configs) {
      if (!row.is_array() || static_cast<Index>(row.size()) != n_m) throw ParseError("config rows must hold n_m bits", 0);
      ms.configs.emplace_back(row.get<std::vector<std::uint8_t>>());
    }

    const auto& blocks = require(j, "H_meas", "");
    if (!blocks.is_array() || static_cast<Index>(blocks.size()) != k) throw ParseError("H_meas must hold k blocks", 0);
    std::vector<Complex> data;
    data.reserve(static_cast<std::size_t>(n_u * n_f * k));
    for (const auto& block : blocks) {
      if (!block.is_array() || static_cast<Index>(block.size()) != n_u * n_f)
        throw ParseError("H_meas blocks must hold n_u*n_f entries", 0);
      for (const auto& z : block) data.push_back(complex_from_json(z, "H_meas"));
    }
    ms.H_meas = Tensor3({n_u, n_f, k}, std::move(data));

    const auto& snr = require(j, "snr_db", "");
    if (!snr.is_null()) ms.snr_db = snr.get<double>();
    if (j.contains("scenario_ref")) ms.scenario_ref = j["scenario_ref"].get<std::string>();
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      ds.seeds.scenario = s.value("scenario", std::uint64_t{0});
      ds.seeds.configs = s.value("configs", std::uint64_t{0});
      ds.seeds.noise = s.value("noise", std::uint64_t{0});
    }
    ms.noise_seed = ds.seeds.noise;

    if (j.contains("layout")) {
      const auto& l = j["layout"];
      ds.layout.reference = l.value("reference", false);
      ds.layout.n_train = l.value("n_train", Index{0});
      ds.layout.n_test = l.value("n_test", Index{0});
    } else {
      ds.layout.n_train = k;
    }
    if (ds.layout.n_train < 0 || ds.layout.n_test < 0 ||
        (ds.layout.reference ? 1 : 0) + ds.layout.n_train + ds.layout.n_test > k)
      throw ParseError("layout does not fit in dims.k", 0);

    if (j.contains("ground_truth")) {
      const auto& g = j["ground_truth"];
      SystemParameters p;
      p.H0 = matrix_from_json(require(g, "H0", "ground_truth."), "ground_truth.H0");
      p.A = matrix_from_json(require(g, "A", "ground_truth."), "ground_truth.A");
      p.B = matrix_from_json(require(g, "B", "ground_truth."), "ground_truth.B");
      p.Gamma = ds.hardware.Gamma;
      p.alpha = ds.hardware.alpha;
      p.beta = ds.hardware.beta;
      try {
        p.validate();
      } catch (const Error& e) {
        throw ParseError(std::string("ground_truth: ") + e.what(), 0);
      }
      if (p.n_u() != n_u || p.n_f() != n_f) throw ParseError("ground_truth: H0 must be n_u x n_f", 0);
      ds.ground_truth = std::move(p);
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed dataset: ") + e.what(), 0);
  }
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  out << dataset_to_json(ds).dump(1) << '\n';
  if (!out) throw ArgumentError("failed writing '" + path + "'");
}

inline Dataset parse_dataset(const std::string& text) {
  json_io::Json j;
  try {
    j = json_io::Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("dataset parse error: ") + e.what(), e.byte);
  }
  return dataset_from_json(j);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

}  // namespace dmace

#endif  // DMACE_SCENARIO_HPP
