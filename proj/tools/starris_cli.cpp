// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "starris/experiments.hpp"

namespace {

// "a..b" (inclusive) or a single seed.
std::vector<std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) return {std::stoull(s)};
    const std::uint64_t a = std::stoull(s.substr(0, dots));
    const std::uint64_t b = std::stoull(s.substr(dots + 2));
    if (b < a) throw starris::InvalidConfig("empty seed range " + s);
    std::vector<std::uint64_t> out;
    for (std::uint64_t v = a; v <= b; ++v) out.push_back(v);
    return out;
  } catch (const std::logic_error&) {
    throw starris::InvalidConfig("bad seed range '" + s + "', expected a..b");
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"STAR-RIS multicell energy-efficiency optimizer"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  int threads = 1;
  std::string seeds;
  auto* run = app.add_subcommand("run", "run a sweep and write results.csv and summary.json");
  run->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seeds", seeds, "seed range a..b, overrides the config");

  std::uint64_t seed = 0;
  std::string trace_dir = ".";
  auto* trace = app.add_subcommand("trace", "write the objective trace of one trial to trace.csv");
  trace->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  trace->add_option("--seed", seed, "scenario seed")->required();
  trace->add_option("--out", trace_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    starris::ExperimentConfig cfg = starris::ExperimentConfig::load(config);
    if (*run) {
      if (!seeds.empty()) cfg.seeds = parse_seed_range(seeds);
      const auto rows = starris::run_sweep(cfg, threads);
      int failed = 0;
      for (const auto& r : rows)
        if (!r.error.empty()) {
          ++failed;
          std::cerr << "seed " << r.seed << ", " << r.sweep_name << "=" << r.sweep_value << ": " << r.error << '\n';
        }
      starris::emit_results(rows, out_dir);
      std::cout << rows.size() << " trials (" << failed << " failed) written to " << out_dir << '\n';
    } else {
      std::vector<starris::TraceRecord> records;
      const auto row = starris::run_trial(cfg, seed, cfg.sweep.values.front(), &records);
      if (!row.error.empty()) {
        std::cerr << "trial failed: " << row.error << '\n';
        return 1;
      }
      std::filesystem::create_directories(trace_dir);
      starris::write_trace(records, std::filesystem::path(trace_dir) / "trace.csv");
      std::cout << "objective " << row.objective << " after " << row.iters << " outer iterations\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
