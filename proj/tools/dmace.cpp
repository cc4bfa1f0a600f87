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

// dmace command-line driver.
//
// Exit codes: 0 success, 2 usage or config error, 3 identifiability failure
// or missing input, 4 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dmace/dmace.hpp"

namespace fs = std::filesystem;
using dmace::Index;
using dmace::Tensor3;
using dmace::json_io::Json;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kIdentifiability = 3, kNumerical = 4 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_db;
  std::optional<double> coupling;
  std::optional<Index> k;
  std::optional<Index> q;
  std::vector<std::string> types;
  bool no_mc = false;
};

void add_scenario_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--snr-db", o.snr_db, "measurement SNR in dB");
  cmd->add_option("--coupling", o.coupling, "coupling strength in [0, 1)");
  cmd->add_option("--k", o.k, "number of training configurations");
  cmd->add_option("--q", o.q, "number of held-out test configurations");
}

void apply(dmace::ScenarioSpec& s, const Overrides& o) {
  if (o.seed) s.seed = *o.seed;
  if (o.snr_db) s.snr_db = *o.snr_db;
  if (o.coupling) s.coupling_strength = *o.coupling;
  s.validate();
}

fs::path output_dir(const std::string& flag, const std::string& from_config = {}) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DMACE_OUTPUT_DIR"); env && *env) return env;
  if (!from_config.empty()) return from_config;
  return ".";
}

fs::path output_file(const std::string& explicit_path, const fs::path& dir, const std::string& name) {
  fs::path p = explicit_path.empty() ? dir / name : fs::path(explicit_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dmace::ArgumentError("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
}

Json report_to_json(const dmace::EstimationReport& r) {
  using dmace::json_io::to_json;
  Json j;
  j["algorithm"] = r.algorithm;
  if (r.H0_hat) j["H0_hat"] = to_json(*r.H0_hat);
  if (r.A_hat) j["A_hat"] = to_json(*r.A_hat);
  if (r.B_hat) j["B_hat"] = to_json(*r.B_hat);
  j["cost_trace"] = r.cost_trace;
  j["iterations_used"] = r.iterations_used;
  j["converged"] = r.converged;
  j["min_k_required"] = r.min_k_required;
  j["k_used"] = r.k_used;
  j["starts_used"] = r.starts_used;
  if (r.zero_forcing_residual) j["zero_forcing_residual"] = *r.zero_forcing_residual;
  j["gram_fallback"] = r.gram_fallback;
  return j;
}

Json metrics_to_json(const dmace::MetricReport& m) {
  Json per = Json::array();
  for (Index i = 0; i < m.per_entry_zeta.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.per_entry_zeta.cols(); ++j) {
      const double z = m.per_entry_zeta(i, j);
      row.push_back(std::isfinite(z) ? Json(20.0 * std::log10(z)) : Json("inf"));
    }
    per.push_back(std::move(row));
  }
  return {{"nmse", m.nmse},
          {"nmse_db", m.nmse_db},
          {"zeta_db", m.zeta_db},
          {"per_entry_zeta_db", std::move(per)},
          {"infinite_zeta_entries", m.infinite_zeta_entries},
          {"q_count", m.q_count}};
}

dmace::Variant variant_from(const std::string& type, bool no_mc) {
  auto v = dmace::parse_variant(type);
  v.no_mc = v.no_mc || no_mc;
  return v;
}

// ---------------------------------------------------------------------------

int cmd_generate(const std::string& config_path, const Overrides& o, const std::string& out_flag,
                 const std::string& dir_flag) {
  const Json j = dmace::read_json_file(config_path);
  dmace::check_config_version(j);
  dmace::DatasetRequest req;
  req.scenario = dmace::scenario_from_json(dmace::json_io::require(j, "scenario", ""));
  apply(req.scenario, o);
  const Json d = j.contains("dataset") ? j.at("dataset") : Json::object();
  const auto& s = req.scenario;
  using dmace::detail::json_field_or;
  req.k_train = json_field_or<Index>(d, "k_train", "dataset.",
                                     4 * dmace::min_k(dmace::ProblemType::type1, s.n_f, s.n_m, s.n_u));
  req.q_test = json_field_or<Index>(d, "q_test", "dataset.", 100);
  req.reference = json_field_or<bool>(d, "reference", "dataset.", true);
  req.ground_truth = json_field_or<bool>(d, "ground_truth", "dataset.", true);
  req.feed_channel = json_field_or<bool>(d, "feed_channel", "dataset.", true);
  if (o.k) req.k_train = *o.k;
  if (o.q) req.q_test = *o.q;

  const auto ds = dmace::make_dataset(req);
  const auto path = output_file(out_flag, output_dir(dir_flag, json_field_or<std::string>(j, "output_dir", "", "")),
                                "dataset.json");
  dmace::save_dataset(ds, path.string());
  std::printf("wrote %s\n", path.string().c_str());
  std::printf("dims: n_u=%ld n_f=%ld n_m=%ld slices=%ld (reference=%d, train=%ld, test=%ld)\n",
              static_cast<long>(ds.n_u()), static_cast<long>(ds.n_f()), static_cast<long>(ds.n_m()),
              static_cast<long>(ds.measurements.k()), ds.layout.reference ? 1 : 0, static_cast<long>(ds.layout.n_train),
              static_cast<long>(ds.layout.n_test));
  if (s.snr_db)
    std::printf("snr_db: %.2f\n", *s.snr_db);
  else
    std::printf("snr_db: none (noiseless)\n");
  std::printf("seeds: scenario=%llu configs=%llu noise=%llu\n", static_cast<unsigned long long>(ds.seeds.scenario),
              static_cast<unsigned long long>(ds.seeds.configs), static_cast<unsigned long long>(ds.seeds.noise));
  return kOk;
}

int cmd_estimate(const std::string& dataset_path, const Overrides& o, const std::string& out_flag,
                 const std::string& dir_flag) {
  const auto ds = dmace::load_dataset(dataset_path);
  const std::string type = o.types.empty() ? "1" : o.types.front();
  const auto variant = variant_from(type, o.no_mc);
  const Index k = o.k ? *o.k : ds.layout.n_train;
  if (k < 1 || k > ds.layout.n_train)
    throw dmace::ArgumentError("--k must lie in [1, " + std::to_string(ds.layout.n_train) + "]");
  dmace::EstimatorConfig cfg;
  if (o.seed) cfg.init_seed = *o.seed;

  const auto known = dmace::known_channels(ds, variant.type);
  const auto est = dmace::run_estimation(variant, dmace::train_tensor(ds, k), dmace::train_configs(ds, k),
                                         ds.hardware, known, cfg);
  Json out;
  out["dataset"] = dataset_path;
  out["type"] = dmace::variant_name(variant);
  out["report"] = report_to_json(est.report);

  auto test = dmace::test_configs(ds);
  if (o.q) test.resize(static_cast<std::size_t>(std::min<Index>(*o.q, static_cast<Index>(test.size()))));
  std::printf("%s on %ld training configurations (K_min = %ld): %d iterations, converged=%s\n",
              est.report.algorithm.c_str(), static_cast<long>(k), static_cast<long>(est.report.min_k_required),
              est.report.iterations_used, est.report.converged ? "true" : "false");
  if (est.report.zero_forcing_residual)
    std::printf("zero-forcing residual: %.3e\n", *est.report.zero_forcing_residual);
  if (test.size() >= 2) {
    const Tensor3 meas = dmace::test_tensor(ds).slices(0, static_cast<Index>(test.size()));
    const auto m = dmace::evaluate(meas, dmace::predict_channels(est, test));
    out["metrics"] = metrics_to_json(m);
    std::printf("held-out Q=%ld: nmse_db=%.2f zeta_db=%.2f\n", static_cast<long>(m.q_count), m.nmse_db, m.zeta_db);
    if (m.infinite_zeta_entries > 0)
      std::fprintf(stderr, "warning: %d entries with zero error spread excluded from zeta\n", m.infinite_zeta_entries);
  } else {
    std::printf("no held-out configurations; metrics skipped\n");
  }
  const auto path = output_file(out_flag, output_dir(dir_flag), "estimate_report.json");
  write_json(path, out);
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

int cmd_sweep(const std::string& config_path, const Overrides& o, int jobs, bool timing, const std::string& dir_flag) {
  const Json j = dmace::read_json_file(config_path);
  auto cfg = dmace::experiment_from_json(j);
  apply(cfg.scenario, o);
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.k) cfg.k_grid = {*o.k};
  if (o.q) cfg.q_test = *o.q;
  if (!o.types.empty()) {
    cfg.variants.clear();
    for (const auto& t : o.types) cfg.variants.push_back(variant_from(t, o.no_mc));
  } else if (o.no_mc) {
    for (auto& v : cfg.variants) v.no_mc = true;
  }
  cfg.validate();

  const auto rows = dmace::run_sweep(cfg, {jobs, timing});
  const fs::path dir = output_dir(dir_flag, cfg.output_dir);
  const auto csv_path = output_file("", dir, "sweep.csv");
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw dmace::ArgumentError("cannot open '" + csv_path.string() + "' for writing");
    dmace::write_sweep_csv(out, rows);
  }
  std::optional<double> threshold;
  if (cfg.scenario.snr_db) threshold = *cfg.scenario.snr_db - 3.0;
  const auto curves = dmace::summarize(rows, threshold);
  write_json(output_file("", dir, "sweep_summary.json"), dmace::summary_to_json(curves));
  int failed = 0;
  for (const auto& r : rows) failed += r.status == "ok" ? 0 : 1;
  std::printf("%zu cells, %d failed; wrote %s\n", rows.size(), failed, csv_path.string().c_str());
  std::printf("%s", dmace::summary_table(curves).c_str());
  return kOk;
}

int cmd_optimize(const std::string& dataset_path, const Overrides& o, Index user, Index feed, int population,
                 int generations, bool use_truth, const std::string& out_flag, const std::string& dir_flag) {
  const auto ds = dmace::load_dataset(dataset_path);
  dmace::ChannelModel model;
  dmace::HardwareModel hw = ds.hardware;
  std::string source;
  if (use_truth) {
    if (!ds.ground_truth) throw dmace::MissingInputError("dataset has no ground-truth parameters");
    model = {ds.ground_truth->H0, ds.ground_truth->A, ds.ground_truth->B};
    source = "ground_truth";
  } else {
    const std::string type = o.types.empty() ? "1" : o.types.front();
    const auto variant = variant_from(type, o.no_mc);
    const Index k = o.k ? *o.k : ds.layout.n_train;
    if (k < 1 || k > ds.layout.n_train)
      throw dmace::ArgumentError("--k must lie in [1, " + std::to_string(ds.layout.n_train) + "]");
    dmace::EstimatorConfig cfg;
    const auto est = dmace::run_estimation(variant, dmace::train_tensor(ds, k), dmace::train_configs(ds, k),
                                           ds.hardware, dmace::known_channels(ds, variant.type), cfg);
    model = est.model;
    hw = est.hardware;
    source = "estimate:" + dmace::variant_name(variant);
  }
  dmace::GaConfig ga;
  if (o.seed) {
    ga.seed = *o.seed;
    ga.baseline_seed = dmace::derive_seed(*o.seed, {1});
  }
  if (population > 0) ga.population = population;
  if (generations > 0) ga.max_generations = generations;
  const auto res = dmace::genetic_optimize(
      [&](const dmace::DmaConfiguration& v) { return dmace::model_gain(model, hw, v, user, feed); }, ds.n_m(), ga);

  Json out;
  out["model"] = source;
  out["user"] = user;
  out["feed"] = feed;
  out["best_v"] = res.best_v.to_string();
  out["predicted_gain"] = res.best_gain;
  out["predicted_gain_db"] = 10.0 * std::log10(res.best_gain);
  out["generations_used"] = res.generations_used;
  out["gain_trace"] = res.gain_trace;
  out["random_baseline"] = {{"mean", res.random_baseline.mean},
                            {"sd", res.random_baseline.sd},
                            {"max", res.random_baseline.max}};
  out["enhancement"] = res.enhancement;
  std::printf("best configuration %s: predicted gain %.4e (%.2f dB), enhancement %.2f over random mean\n",
              res.best_v.to_string().c_str(), res.best_gain, 10.0 * std::log10(res.best_gain), res.enhancement);
  if (ds.ground_truth) {
    const double truth = dmace::channel_gain(*ds.ground_truth, res.best_v, user, feed);
    out["ground_truth_gain"] = truth;
    out["ground_truth_gain_db"] = 10.0 * std::log10(truth);
    out["prediction_error_db"] = 10.0 * std::log10(res.best_gain / truth);
    std::printf("ground-truth gain of that configuration: %.4e (%.2f dB), difference %.3f dB\n", truth,
                10.0 * std::log10(truth), 10.0 * std::log10(res.best_gain / truth));
  }
  const auto path = output_file(out_flag, output_dir(dir_flag), "optimization.json");
  write_json(path, out);
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

int cmd_report(const std::string& csv_path, std::optional<double> snr_db, const std::string& out_flag,
               const std::string& dir_flag) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw dmace::ArgumentError("cannot open '" + csv_path + "'");
  const auto rows = dmace::read_sweep_csv(in);
  std::optional<double> threshold;
  if (snr_db) threshold = *snr_db - 3.0;
  const auto curves = dmace::summarize(rows, threshold);
  std::printf("%s", dmace::summary_table(curves).c_str());
  const auto path = output_file(out_flag, output_dir(dir_flag), "report.json");
  write_json(path, dmace::summary_to_json(curves));
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const dmace::IdentifiabilityError*>(&e) || dynamic_cast<const dmace::MissingInputError*>(&e))
    return kIdentifiability;
  if (dynamic_cast<const dmace::SingularityError*>(&e) || dynamic_cast<const dmace::DivergenceError*>(&e) ||
      dynamic_cast<const dmace::PreconditionError*>(&e) || dynamic_cast<const dmace::DegenerateInputError*>(&e))
    return kNumerical;
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dmace: channel estimation for dynamic metasurface antennas with mutual coupling"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string dir_flag;
  app.add_option("--output-dir", dir_flag, "output directory (default: $DMACE_OUTPUT_DIR or .)");

  Overrides o;
  std::string input, out_flag;

  auto* gen = app.add_subcommand("generate", "simulate a scenario and write a dataset");
  gen->add_option("config", input, "experiment or scenario config (JSON)")->required();
  gen->add_option("-o,--out", out_flag, "dataset path");
  add_scenario_flags(gen, o);

  auto* est = app.add_subcommand("estimate", "fit a channel model to a dataset and evaluate it");
  est->add_option("dataset", input, "dataset file")->required();
  est->add_option("--type", o.types, "problem type: 1, 2, 3, 4, rbf (suffix -nomc for the coupling-unaware model)");
  est->add_flag("--no-mc", o.no_mc, "ignore mutual coupling (Gamma = 0)");
  est->add_option("-o,--out", out_flag, "report path");
  add_scenario_flags(est, o);

  int jobs = 1;
  bool timing = false;
  auto* sweep = app.add_subcommand("sweep", "run a K x N_F sweep and write sweep.csv");
  sweep->add_option("config", input, "experiment config (JSON)")->required();
  sweep->add_option("--type", o.types, "restrict to these problem types");
  sweep->add_flag("--no-mc", o.no_mc, "run the coupling-unaware variants");
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--timing", timing, "record wall-clock times in the CSV");
  add_scenario_flags(sweep, o);

  Index user = 0, feed = 0;
  int population = 0, generations = 0;
  bool use_truth = false;
  auto* opt = app.add_subcommand("optimize", "maximize a SISO channel gain over configurations");
  opt->add_option("dataset", input, "dataset file")->required();
  opt->add_option("--type", o.types, "problem type used to estimate the model");
  opt->add_flag("--no-mc", o.no_mc, "ignore mutual coupling in the model");
  opt->add_option("--user", user, "user index");
  opt->add_option("--feed", feed, "feed index");
  opt->add_option("--population", population, "GA population");
  opt->add_option("--generations", generations, "GA generation limit");
  opt->add_flag("--use-ground-truth", use_truth, "optimize on the stored ground-truth parameters");
  opt->add_option("-o,--out", out_flag, "result path");
  add_scenario_flags(opt, o);

  std::optional<double> report_snr;
  auto* rep = app.add_subcommand("report", "summarize a sweep CSV");
  rep->add_option("csv", input, "sweep CSV")->required();
  rep->add_option("--snr-db", report_snr, "threshold is this SNR minus 3 dB (default: best zeta minus 3 dB)");
  rep->add_option("-o,--out", out_flag, "summary path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(input, o, out_flag, dir_flag);
    if (*est) return cmd_estimate(input, o, out_flag, dir_flag);
    if (*sweep) return cmd_sweep(input, o, jobs, timing, dir_flag);
    if (*opt) return cmd_optimize(input, o, user, feed, population, generations, use_truth, out_flag, dir_flag);
    if (*rep) return cmd_report(input, report_snr, out_flag, dir_flag);
  } catch (const dmace::IdentifiabilityError& e) {
    std::fprintf(stderr, "error: %s (K = %ld, K_min = %ld)\n", e.what(), static_cast<long>(e.k_used()),
                 static_cast<long>(e.k_min()));
    return kIdentifiability;
  } catch (const dmace::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const dmace::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
