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

// End-to-end experiment plumbing: dataset construction, the estimate /
// predict / evaluate pipeline, experiment configs, K x N_F sweeps with CSV
// output and their aggregation into summary tables.

#ifndef DMACE_EXPERIMENT_HPP
#define DMACE_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dmace/errors.hpp"
#include "dmace/estimators.hpp"
#include "dmace/json_io.hpp"
#include "dmace/metrics.hpp"
#include "dmace/mnt_model.hpp"
#include "dmace/optimizer.hpp"
#include "dmace/scenario.hpp"

namespace dmace {

inline constexpr int kExperimentConfigVersion = 1;

// SplitMix64 mixing of a master seed with integer coordinates.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  for (auto c : coords) h = mix(h ^ mix(c));
  return h;
}

// An estimator together with the coupling model it is run under. With
// no_mc the coupling matrix is replaced by zero for both training and
// prediction.
struct Variant {
  ProblemType type = ProblemType::type1;
  bool no_mc = false;

  friend bool operator==(const Variant&, const Variant&) = default;
};

inline std::string variant_name(const Variant& v) { return to_string(v.type) + (v.no_mc ? "-nomc" : ""); }

inline Variant parse_variant(const std::string& s) {
  for (const std::string suffix : {"-nomc", "_nomc", "-no_mc", "_no_mc"}) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
      return {parse_problem_type(s.substr(0, s.size() - suffix.size())), true};
  }
  return {parse_problem_type(s), false};
}

// ---------------------------------------------------------------------------
// Datasets

struct DatasetRequest {
  ScenarioSpec scenario;
  Index k_train = 0;
  Index q_test = 100;
  bool reference = true;
  bool ground_truth = true;
  bool feed_channel = true;
};

// Slice order: [reference] training... test...
inline Dataset make_dataset(const DatasetRequest& req) {
  req.scenario.validate();
  if (req.k_train < 1) throw ArgumentError("dataset: k_train must be at least 1");
  if (req.q_test < 0) throw ArgumentError("dataset: q_test must be non-negative");
  const auto& s = req.scenario;
  const SystemParameters p = generate_params(s);
  Dataset ds;
  ds.seeds = {s.seed, derive_seed(s.seed, {1}), derive_seed(s.seed, {2})};
  std::vector<DmaConfiguration> configs;
  if (req.reference) configs.push_back(DmaConfiguration::zeros(s.n_m));
  for (auto& v : sample_configs(s.n_m, req.k_train, ds.seeds.configs)) configs.push_back(std::move(v));
  if (req.q_test > 0)
    for (auto& v : sample_configs(s.n_m, req.q_test, derive_seed(ds.seeds.configs, {1}))) configs.push_back(std::move(v));
  ds.measurements = measure(p, configs, s.snr_db, ds.seeds.noise, "synthetic:" + std::to_string(s.seed));
  ds.hardware = p.hardware();
  if (req.feed_channel) ds.feed_channel = p.B;
  if (req.ground_truth) ds.ground_truth = p;
  ds.layout = {req.reference, req.k_train, req.q_test};
  return ds;
}

inline Index train_offset(const Dataset& ds) { return ds.layout.reference ? 1 : 0; }

inline Tensor3 train_tensor(const Dataset& ds, Index k) {
  return ds.measurements.H_meas.slices(train_offset(ds), k);
}
inline std::vector<DmaConfiguration> train_configs(const Dataset& ds, Index k) {
  const auto first = ds.measurements.configs.begin() + train_offset(ds);
  return {first, first + k};
}
inline Tensor3 test_tensor(const Dataset& ds) {
  return ds.measurements.H_meas.slices(train_offset(ds) + ds.layout.n_train, ds.layout.n_test);
}
inline std::vector<DmaConfiguration> test_configs(const Dataset& ds) {
  const auto first = ds.measurements.configs.begin() + train_offset(ds) + ds.layout.n_train;
  return {first, first + ds.layout.n_test};
}

// H(0) = H0 holds only for alpha = 0; the reference slice is then a (noisy)
// measurement of H0.
inline std::optional<ComplexMatrix> reference_h0(const Dataset& ds) {
  if (!ds.layout.reference || ds.hardware.alpha != Complex(0.0, 0.0)) return std::nullopt;
  return ComplexMatrix(ds.measurements.H_meas.slice(0));
}

// Only the channels a problem type is allowed to know are filled in.
inline KnownChannels known_channels(const Dataset& ds, ProblemType t) {
  KnownChannels known;
  if (needs_known_h0(t)) {
    known.H0 = reference_h0(ds);
    if (!known.H0)
      throw MissingInputError("problem type " + to_string(t) +
                              " needs H0 from an all-zeros reference measurement with alpha = 0");
  }
  if (needs_known_b(t)) {
    if (!ds.feed_channel) throw MissingInputError("problem type " + to_string(t) + " needs the feed channel B");
    known.B = ds.feed_channel;
  }
  return known;
}

// ---------------------------------------------------------------------------
// Estimation pipeline

struct EstimationOutcome {
  Variant variant;
  EstimationReport report;
  KnownChannels known;
  ChannelModel model;
  HardwareModel hardware;  // coupling model used for training and prediction
};

inline HardwareModel variant_hardware(const HardwareModel& hw, const Variant& v) {
  HardwareModel out = hw;
  if (v.no_mc) out.Gamma = ComplexMatrix::Zero(hw.n_m(), hw.n_m());
  return out;
}

inline EstimationOutcome run_estimation(const Variant& variant, const Tensor3& h_train,
                                        const std::vector<DmaConfiguration>& configs, const HardwareModel& hw,
                                        const KnownChannels& known, const EstimatorConfig& cfg) {
  if (static_cast<Index>(configs.size()) != h_train.dim3())
    throw ArgumentError("run_estimation: configuration count does not match the measurements");
  EstimationOutcome out;
  out.variant = variant;
  out.known = known;
  out.hardware = variant_hardware(hw, variant);
  const ProblemType t = variant.type;
  if (needs_known_h0(t) && !known.H0) throw MissingInputError("problem type " + to_string(t) + " needs known H0");
  if (needs_known_b(t) && !known.B) throw MissingInputError("problem type " + to_string(t) + " needs known B");

  const Index n_f = h_train.dim2();
  // Fail on too few configurations before touching the forward model.
  detail::check_k(t, h_train.dim3(), n_f, hw.n_m(), h_train.dim1());
  const OmegaStacks stacks = build_omega_stacks(out.hardware, configs, n_f);
  Tensor3 h_ring;
  if (needs_known_h0(t)) {
    h_ring = h_train;
    for (Index k = 0; k < h_ring.dim3(); ++k) h_ring.slice(k) -= *known.H0;
  }
  switch (t) {
    case ProblemType::type1: out.report = btals1(h_train, stacks.augmented, cfg); break;
    case ProblemType::type2: out.report = btals2(h_ring, stacks.plain, cfg); break;
    case ProblemType::type3: out.report = btals3(h_train, stacks.augmented, *known.B, cfg); break;
    case ProblemType::type4: out.report = btals4(h_ring, stacks.plain, *known.B, cfg); break;
    case ProblemType::rbf: out.report = rbf(h_ring, stacks.plain, cfg); break;
  }
  out.model = resolve_model(out.report, known);
  return out;
}

inline Tensor3 predict_channels(const EstimationOutcome& est, const std::vector<DmaConfiguration>& configs) {
  return predict(est.model, build_omega_stack(est.hardware, configs));
}

// |[H0 + A Omega(v) B]_{user, feed}|^2 under the estimated model.
inline double model_gain(const ChannelModel& m, const HardwareModel& hw, const DmaConfiguration& v, Index user,
                         Index feed) {
  if (user < 0 || user >= m.H0.rows() || feed < 0 || feed >= m.H0.cols())
    throw ArgumentError("model_gain: user or feed index out of range");
  const ComplexMatrix om = omega(hw, v);
  const Complex h = m.H0(user, feed) + (m.A.row(user) * om * m.B.col(feed)).value();
  return std::norm(h);
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct ExperimentConfig {
  ScenarioSpec scenario;
  std::vector<Variant> variants;
  std::vector<Index> k_grid;
  std::vector<Index> n_f_grid;
  Index q_test = 100;
  std::vector<std::uint64_t> seeds;
  EstimatorConfig estimator;
  std::string output_dir;

  void validate() const {
    scenario.validate();
    if (variants.empty()) throw ArgumentError("config: problem_types must not be empty");
    if (k_grid.empty()) throw ArgumentError("config: k_grid must not be empty");
    if (n_f_grid.empty()) throw ArgumentError("config: n_f_grid must not be empty");
    if (seeds.empty()) throw ArgumentError("config: seeds must not be empty");
    if (q_test < 2) throw ArgumentError("config: test_configs must be at least 2");
    for (auto k : k_grid)
      if (k < 1) throw ArgumentError("config: k_grid entries must be positive");
    for (auto n : n_f_grid)
      if (n < 1) throw ArgumentError("config: n_f_grid entries must be positive");
    estimator.validate();
  }
};

namespace detail {

template <typename T>
T json_field(const json_io::Json& j, const std::string& key, const std::string& path) {
  const auto& v = json_io::require(j, key, path);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("field '" + path + key + "' has the wrong type", 0);
  }
}

template <typename T>
T json_field_or(const json_io::Json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return json_field<T>(j, key, path);
}

inline void require_object(const json_io::Json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError("field '" + path + "' must be an object", 0);
}

}  // namespace detail

inline ScenarioSpec scenario_from_json(const json_io::Json& j, const std::string& path = "scenario.") {
  using detail::json_field;
  using detail::json_field_or;
  detail::require_object(j, path.substr(0, path.size() - 1));
  ScenarioSpec s;
  s.n_f = json_field<Index>(j, "n_f", path);
  s.n_m = json_field<Index>(j, "n_m", path);
  s.n_u = json_field<Index>(j, "n_u", path);
  s.coupling_strength = json_field_or<double>(j, "coupling_strength", path, 0.5);
  if (j.contains("snr_db") && !j.at("snr_db").is_null()) s.snr_db = json_field<double>(j, "snr_db", path);
  s.seed = json_field_or<std::uint64_t>(j, "seed", path, 0);
  if (j.contains("alpha")) s.alpha = json_io::complex_from_json(j.at("alpha"), path + "alpha");
  if (j.contains("beta")) s.beta = json_io::complex_from_json(j.at("beta"), path + "beta");
  try {
    s.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  return s;
}

inline EstimatorConfig estimator_from_json(const json_io::Json& j, const std::string& path = "estimator.") {
  using detail::json_field_or;
  detail::require_object(j, path.substr(0, path.size() - 1));
  EstimatorConfig c;
  c.max_iter = json_field_or<int>(j, "max_iter", path, c.max_iter);
  c.cost_tol = json_field_or<double>(j, "cost_tol", path, c.cost_tol);
  c.rank_tol = json_field_or<double>(j, "rank_tol", path, c.rank_tol);
  c.init_seed = json_field_or<std::uint64_t>(j, "init_seed", path, c.init_seed);
  c.starts = json_field_or<int>(j, "starts", path, c.starts);
  c.refine_max_iter = json_field_or<int>(j, "refine_max_iter", path, c.refine_max_iter);
  c.extrapolate = json_field_or<bool>(j, "extrapolate", path, c.extrapolate);
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  return c;
}

inline void check_config_version(const json_io::Json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
  if (!j.contains("version")) return;
  const int v = detail::json_field<int>(j, "version", "");
  if (v != kExperimentConfigVersion)
    throw VersionError("config version " + std::to_string(v) + " is not supported", v, kExperimentConfigVersion);
}

inline ExperimentConfig experiment_from_json(const json_io::Json& j) {
  using detail::json_field;
  using detail::json_field_or;
  check_config_version(j);
  ExperimentConfig c;
  c.scenario = scenario_from_json(json_io::require(j, "scenario", ""));
  for (const auto& name : json_field<std::vector<std::string>>(j, "problem_types", "")) {
    try {
      c.variants.push_back(parse_variant(name));
    } catch (const ArgumentError& e) {
      throw ParseError(std::string("field 'problem_types': ") + e.what(), 0);
    }
  }
  c.k_grid = json_field<std::vector<Index>>(j, "k_grid", "");
  c.n_f_grid = json_field_or<std::vector<Index>>(j, "n_f_grid", "", {c.scenario.n_f});
  c.q_test = json_field_or<Index>(j, "test_configs", "", 100);
  c.seeds = json_field_or<std::vector<std::uint64_t>>(j, "seeds", "", {c.scenario.seed});
  if (j.contains("estimator")) c.estimator = estimator_from_json(j.at("estimator"));
  c.output_dir = json_field_or<std::string>(j, "output_dir", "", "");
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(e.what(), 0);
  }
  return c;
}

inline json_io::Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json_io::Json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), e.byte);
  }
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  std::string type;
  Index n_f = 0;
  Index k = 0;
  std::uint64_t seed = 0;
  double nmse_db = std::numeric_limits<double>::quiet_NaN();
  double zeta_db = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double wall_time_ms = 0.0;
  bool converged = false;
  std::string status = "ok";
};

// Status values recorded for failed cells.
inline std::string status_for(const std::exception& e) {
  if (dynamic_cast<const IdentifiabilityError*>(&e)) return "identifiability";
  if (dynamic_cast<const MissingInputError*>(&e)) return "missing_input";
  if (dynamic_cast<const SingularityError*>(&e) || dynamic_cast<const DivergenceError*>(&e) ||
      dynamic_cast<const PreconditionError*>(&e) || dynamic_cast<const DegenerateInputError*>(&e))
    return "numerical";
  return "error";
}

struct SweepOptions {
  int jobs = 1;
  bool timing = false;  // record wall-clock times (makes the CSV run-dependent)
};

inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const SweepOptions& opt = {}) {
  cfg.validate();
  const Index k_max = *std::max_element(cfg.k_grid.begin(), cfg.k_grid.end());

  // One scenario and one measurement set per (n_f, seed); K varies by prefix.
  std::vector<Dataset> columns;
  struct Cell {
    std::size_t column;
    std::size_t variant;
    Index k;
  };
  std::vector<Cell> cells;
  for (Index n_f : cfg.n_f_grid) {
    for (auto seed : cfg.seeds) {
      DatasetRequest req;
      req.scenario = cfg.scenario;
      req.scenario.n_f = n_f;
      req.scenario.seed = derive_seed(seed, {static_cast<std::uint64_t>(n_f)});
      req.k_train = k_max;
      req.q_test = cfg.q_test;
      req.reference = true;
      columns.push_back(make_dataset(req));
      for (std::size_t v = 0; v < cfg.variants.size(); ++v)
        for (Index k : cfg.k_grid) cells.push_back({columns.size() - 1, v, k});
    }
  }
  std::vector<std::uint64_t> column_seed;
  for (std::size_t i = 0; i < cfg.n_f_grid.size(); ++i)
    for (auto seed : cfg.seeds) column_seed.push_back(seed);

  std::vector<SweepRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    const Cell& c = cells[i];
    const Dataset& ds = columns[c.column];
    const Variant& variant = cfg.variants[c.variant];
    SweepRow row;
    row.type = variant_name(variant);
    row.n_f = ds.n_f();
    row.k = c.k;
    row.seed = column_seed[c.column];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      EstimatorConfig ec = cfg.estimator;
      // shared by the MC-aware and MC-unaware runs of the same cell
      ec.init_seed = derive_seed(cfg.estimator.init_seed,
                                 {row.seed, static_cast<std::uint64_t>(row.n_f), static_cast<std::uint64_t>(c.k),
                                  static_cast<std::uint64_t>(variant.type)});
      const auto est = run_estimation(variant, train_tensor(ds, c.k), train_configs(ds, c.k), ds.hardware,
                                      known_channels(ds, variant.type), ec);
      const Tensor3 meas = test_tensor(ds);
      const auto metrics = evaluate(meas, predict_channels(est, test_configs(ds)));
      row.nmse_db = metrics.nmse_db;
      row.zeta_db = metrics.zeta_db;
      row.iterations = est.report.iterations_used;
      row.converged = est.report.converged;
    } catch (const Error& e) {
      row.status = status_for(e);
    }
    if (opt.timing)
      row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rows[i] = std::move(row);
  };

  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
      });
    for (auto& t : pool) t.join();
  }
  return rows;
}

inline const char* kSweepHeader = "type,n_f,k,seed,nmse_db,zeta_db,iterations,wall_time_ms,converged,status";

namespace detail {

inline std::string csv_number(double x, int digits) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// One RFC 4180 record per line; embedded newlines are not supported.
inline std::vector<std::string> csv_split(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("csv line " + std::to_string(line_no) + ": unterminated quote", 0);
  out.push_back(std::move(cur));
  return out;
}

inline double csv_parse_double(const std::string& s, std::size_t line_no, const char* column) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("csv line " + std::to_string(line_no) + ": bad value '" + s + "' in column " + column, 0);
  }
}

}  // namespace detail

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << detail::csv_quote(r.type) << ',' << r.n_f << ',' << r.k << ',' << r.seed << ','
        << detail::csv_number(r.nmse_db, 6) << ',' << detail::csv_number(r.zeta_db, 6) << ',' << r.iterations << ','
        << detail::csv_number(r.wall_time_ms, 3) << ',' << (r.converged ? "true" : "false") << ','
        << detail::csv_quote(r.status) << '\n';
  }
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input", 0);
  const auto header = detail::csv_split(line, 1);
  const std::vector<std::string> expected{"type", "n_f", "k", "seed", "nmse_db", "zeta_db", "iterations",
                                          "wall_time_ms", "converged", "status"};
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : expected)
    if (!col.count(name)) throw ParseError("csv: missing column '" + name + "'", 0);

  std::vector<SweepRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::csv_split(line, line_no);
    if (f.size() != header.size())
      throw ParseError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(f.size()),
                       0);
    auto get = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    SweepRow r;
    r.type = get("type");
    try {
      parse_variant(r.type);
    } catch (const ArgumentError&) {
      throw ParseError("csv line " + std::to_string(line_no) + ": unknown type '" + r.type + "'", 0);
    }
    r.n_f = static_cast<Index>(detail::csv_parse_double(get("n_f"), line_no, "n_f"));
    r.k = static_cast<Index>(detail::csv_parse_double(get("k"), line_no, "k"));
    try {
      r.seed = std::stoull(get("seed"));
    } catch (const std::exception&) {
      throw ParseError("csv line " + std::to_string(line_no) + ": bad seed", 0);
    }
    r.nmse_db = detail::csv_parse_double(get("nmse_db"), line_no, "nmse_db");
    r.zeta_db = detail::csv_parse_double(get("zeta_db"), line_no, "zeta_db");
    r.iterations = static_cast<int>(detail::csv_parse_double(get("iterations"), line_no, "iterations"));
    r.wall_time_ms = detail::csv_parse_double(get("wall_time_ms"), line_no, "wall_time_ms");
    const auto& conv = get("converged");
    if (conv != "true" && conv != "false")
      throw ParseError("csv line " + std::to_string(line_no) + ": converged must be true or false", 0);
    r.converged = conv == "true";
    r.status = get("status");
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation

struct CurvePoint {
  Index k = 0;
  double zeta_db = 0.0;  // mean over successful seeds
  double nmse_db = 0.0;
  int ok = 0;
  int failed = 0;
};

struct CurveSummary {
  std::string type;
  Index n_f = 0;
  std::vector<CurvePoint> points;  // ascending k
  std::optional<Index> k_at_threshold;
  double threshold_db = 0.0;
  double best_zeta_db = -std::numeric_limits<double>::infinity();
  Index best_k = 0;
};

// Groups rows by (type, n_f), averages zeta and NMSE over seeds for each K
// and finds the smallest K whose mean zeta reaches the threshold. Without an
// explicit threshold each curve uses its own best zeta minus 3 dB.
inline std::vector<CurveSummary> summarize(const std::vector<SweepRow>& rows, std::optional<double> threshold_db) {
  std::map<std::pair<std::string, Index>, std::map<Index, std::vector<const SweepRow*>>> groups;
  for (const auto& r : rows) groups[{r.type, r.n_f}][r.k].push_back(&r);
  std::vector<CurveSummary> out;
  for (const auto& [key, by_k] : groups) {
    CurveSummary s;
    s.type = key.first;
    s.n_f = key.second;
    for (const auto& [k, list] : by_k) {
      CurvePoint p;
      p.k = k;
      double z = 0.0, n = 0.0;
      for (const auto* r : list) {
        if (r->status == "ok" && std::isfinite(r->zeta_db) && std::isfinite(r->nmse_db)) {
          z += r->zeta_db;
          n += r->nmse_db;
          ++p.ok;
        } else {
          ++p.failed;
        }
      }
      p.zeta_db = p.ok > 0 ? z / p.ok : std::numeric_limits<double>::quiet_NaN();
      p.nmse_db = p.ok > 0 ? n / p.ok : std::numeric_limits<double>::quiet_NaN();
      if (p.ok > 0 && p.zeta_db > s.best_zeta_db) {
        s.best_zeta_db = p.zeta_db;
        s.best_k = k;
      }
      s.points.push_back(p);
    }
    s.threshold_db = threshold_db ? *threshold_db : s.best_zeta_db - 3.0;
    for (const auto& p : s.points)
      if (p.ok > 0 && p.zeta_db >= s.threshold_db) {
        s.k_at_threshold = p.k;
        break;
      }
    out.push_back(std::move(s));
  }
  return out;
}

inline json_io::Json summary_to_json(const std::vector<CurveSummary>& curves) {
  using json_io::Json;
  Json arr = Json::array();
  for (const auto& c : curves) {
    Json pts = Json::array();
    for (const auto& p : c.points) {
      pts.push_back({{"k", p.k},
                     {"zeta_db", std::isfinite(p.zeta_db) ? Json(p.zeta_db) : Json(nullptr)},
                     {"nmse_db", std::isfinite(p.nmse_db) ? Json(p.nmse_db) : Json(nullptr)},
                     {"ok", p.ok},
                     {"failed", p.failed}});
    }
    arr.push_back({{"type", c.type},
                   {"n_f", c.n_f},
                   {"threshold_db", c.threshold_db},
                   {"k_at_threshold", c.k_at_threshold ? Json(*c.k_at_threshold) : Json(nullptr)},
                   {"best_zeta_db", std::isfinite(c.best_zeta_db) ? Json(c.best_zeta_db) : Json(nullptr)},
                   {"best_k", c.best_k},
                   {"points", std::move(pts)}});
  }
  return arr;
}

inline std::string summary_table(const std::vector<CurveSummary>& curves) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %5s %12s %10s %14s %7s\n", "type", "n_f", "best_zeta_db", "best_k",
                "threshold_db", "k_min");
  os << buf;
  for (const auto& c : curves) {
    const std::string kmin = c.k_at_threshold ? std::to_string(*c.k_at_threshold) : "-";
    std::snprintf(buf, sizeof(buf), "%-10s %5ld %12.2f %10ld %14.2f %7s\n", c.type.c_str(), static_cast<long>(c.n_f),
                  c.best_zeta_db, static_cast<long>(c.best_k), c.threshold_db, kmin.c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace dmace

#endif  // DMACE_EXPERIMENT_HPP
