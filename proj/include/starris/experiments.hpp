// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "starris/optimizer.hpp"

namespace starris {

enum class Scheme { RS, TIN };
enum class Signaling {
  IGS,           // IQI-aware improper signaling
  ProperIGSOff,  // designed as if the hardware were ideal, with proper signals
};
enum class RisMode { ES, MS, RegularRIS, RandomRIS, NoRIS };

std::string to_string(Scheme s);
std::string to_string(Signaling s);
std::string to_string(RisMode m);
Scheme parse_scheme(const std::string& s);
Signaling parse_signaling(const std::string& s);
RisMode parse_ris_mode(const std::string& s);

struct SweepSpec {
  std::string name = "p_c";  // p_c, p_max or eta
  std::vector<double> values{1.0};
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<std::uint64_t> seeds{1};
  Scheme scheme = Scheme::RS;
  Signaling signaling = Signaling::IGS;
  RisMode ris_mode = RisMode::ES;
  FeasibilitySet t_set = FeasibilitySet::TI;
  SweepSpec sweep;
  double p_c = 1.0;
  double eta = 2.5;
  double p_max = 1.0;
  double alpha = 1.0;  // same weight for every user
  double r_th = 0.0;
  SolverSettings solver;
  bool record_wall_time = true;

  void validate() const;
  EEParams ee_params(double sweep_value) const;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// A ready-to-run trial. `design` is what the optimizer sees; `truth` is what the result is
/// scored on. They differ only for IQI-unaware signaling.
struct Baseline {
  Instance design;
  Instance truth;
  OptState initial;
};

Baseline build_baseline(const ExperimentConfig& cfg, std::uint64_t seed, double sweep_value);

struct ResultRow {
  std::string scheme;
  std::string signaling;
  std::string ris_mode;
  std::string t_set;
  std::uint64_t seed = 0;
  std::string sweep_name;
  double sweep_value = 0.0;
  double objective = 0.0;  // nan when the trial failed
  int iters = 0;
  double wall_ms = 0.0;
  std::vector<std::vector<double>> ee;  // [l][k]
  std::string error;
};

/// Runs one trial and scores it.
ResultRow run_trial(const ExperimentConfig& cfg, std::uint64_t seed, double sweep_value,
                    std::vector<TraceRecord>* trace = nullptr);

/// All (seed, sweep value) trials, ordered seed-major regardless of `threads`.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, int threads = 1);

std::string csv_header(int num_cells, int users_per_cell);
std::string csv_line(const ResultRow& row);
nlohmann::json summarize(const std::vector<ResultRow>& rows);

/// Writes results.csv and summary.json into `dir`. Throws before touching the filesystem
/// when `rows` is empty.
void emit_results(const std::vector<ResultRow>& rows, const std::filesystem::path& dir);

void write_trace(const std::vector<TraceRecord>& trace, const std::filesystem::path& path);

} // namespace starris
