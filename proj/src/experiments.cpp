// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include "starris/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace starris {

using nlohmann::json;

std::string to_string(Scheme s) { return s == Scheme::RS ? "RS" : "TIN"; }

std::string to_string(Signaling s) { return s == Signaling::IGS ? "IGS" : "ProperIGSOff"; }

std::string to_string(RisMode m) {
  switch (m) {
    case RisMode::ES: return "ES";
    case RisMode::MS: return "MS";
    case RisMode::RegularRIS: return "RegularRIS";
    case RisMode::RandomRIS: return "RandomRIS";
    case RisMode::NoRIS: return "NoRIS";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "RS") return Scheme::RS;
  if (s == "TIN") return Scheme::TIN;
  throw InvalidConfig("unknown scheme '" + s + "'");
}

Signaling parse_signaling(const std::string& s) {
  if (s == "IGS") return Signaling::IGS;
  if (s == "ProperIGSOff") return Signaling::ProperIGSOff;
  throw InvalidConfig("unknown signaling '" + s + "'");
}

RisMode parse_ris_mode(const std::string& s) {
  for (RisMode m : {RisMode::ES, RisMode::MS, RisMode::RegularRIS, RisMode::RandomRIS, RisMode::NoRIS})
    if (s == to_string(m)) return m;
  throw InvalidConfig("unknown ris_mode '" + s + "'");
}

void ExperimentConfig::validate() const {
  scenario.validate();
  solver.validate();
  if (seeds.empty()) throw InvalidConfig("seeds must not be empty");
  if (sweep.name != "p_c" && sweep.name != "p_max" && sweep.name != "eta")
    throw InvalidConfig("sweep name must be p_c, p_max or eta");
  if (sweep.values.empty()) throw InvalidConfig("sweep grid must not be empty");
  for (std::size_t i = 1; i < sweep.values.size(); ++i)
    if (!(sweep.values[i] > sweep.values[i - 1])) throw InvalidConfig("sweep grid must be strictly increasing");
  if (signaling == Signaling::ProperIGSOff && ris_mode != RisMode::RandomRIS && ris_mode != RisMode::NoRIS)
    throw InvalidConfig("ProperIGSOff runs with RandomRIS or NoRIS only");
  for (double v : sweep.values) ee_params(v).validate();
}

EEParams ExperimentConfig::ee_params(double sweep_value) const {
  EEParams e = EEParams::defaults(scenario.num_cells, scenario.users_per_cell);
  e.p_c = p_c;
  e.eta = eta;
  e.p_max = p_max;
  for (auto& row : e.alpha) std::fill(row.begin(), row.end(), alpha);
  for (auto& row : e.r_th) std::fill(row.begin(), row.end(), r_th);
  if (sweep.name == "p_c") e.p_c = sweep_value;
  if (sweep.name == "p_max") e.p_max = sweep_value;
  if (sweep.name == "eta") e.eta = sweep_value;
  return e;
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    ScenarioConfig& s = c.scenario;
    read(j, "num_cells", s.num_cells);
    read(j, "users_per_cell", s.users_per_cell);
    read(j, "num_ris", s.num_ris);
    read(j, "n_bs", s.n_bs);
    read(j, "n_u", s.n_u);
    read(j, "n_ris", s.n_ris);
    read(j, "cell_radius", s.cell_radius);
    read(j, "user_min_distance", s.user_min_distance);
    read(j, "direct_pl_ref_db", s.direct_pl_ref_db);
    read(j, "direct_pl_exponent", s.direct_pl_exponent);
    read(j, "ris_pl_ref_db", s.ris_pl_ref_db);
    read(j, "ris_pl_exponent", s.ris_pl_exponent);
    read(j, "rician_k_db", s.rician_k_db);
    read(j, "noise_power_dbm", s.noise_power_dbm);
    read(j, "transmit_fraction", s.transmit_fraction);
    if (j.contains("iqi")) {
      const json& q = j.at("iqi");
      read(q, "tx_amplitude", s.iqi_tx_amplitude);
      read(q, "tx_phase_deg", s.iqi_tx_phase_deg);
      read(q, "rx_amplitude", s.iqi_rx_amplitude);
      read(q, "rx_phase_deg", s.iqi_rx_phase_deg);
    }
    read(j, "seeds", c.seeds);
    if (j.contains("scheme")) c.scheme = parse_scheme(j.at("scheme").get<std::string>());
    if (j.contains("signaling")) c.signaling = parse_signaling(j.at("signaling").get<std::string>());
    if (j.contains("ris_mode")) c.ris_mode = parse_ris_mode(j.at("ris_mode").get<std::string>());
    if (j.contains("t_set")) c.t_set = parse_feasibility_set(j.at("t_set").get<std::string>());
    if (j.contains("sweep")) {
      read(j.at("sweep"), "name", c.sweep.name);
      read(j.at("sweep"), "values", c.sweep.values);
    }
    if (j.contains("ee")) {
      const json& e = j.at("ee");
      read(e, "p_c", c.p_c);
      read(e, "eta", c.eta);
      read(e, "p_max", c.p_max);
      read(e, "alpha", c.alpha);
      read(e, "r_th", c.r_th);
    }
    if (j.contains("solver")) {
      const json& o = j.at("solver");
      SolverSettings& so = c.solver;
      read(o, "outer_tol", so.outer_tol);
      read(o, "max_outer", so.max_outer);
      read(o, "dinkelbach_tol", so.dinkelbach_tol);
      read(o, "max_dinkelbach", so.max_dinkelbach);
      read(o, "ccp_inner_iters", so.ccp_inner_iters);
      read(o, "epsilon0", so.epsilon0);
      read(o, "epsilon_decay", so.epsilon_decay);
      if (o.contains("barrier")) {
        const json& b = o.at("barrier");
        read(b, "mu0", so.barrier.mu0);
        read(b, "mu_factor", so.barrier.mu_factor);
        read(b, "mu_min", so.barrier.mu_min);
        read(b, "grad_tol", so.barrier.grad_tol);
        read(b, "max_newton", so.barrier.max_newton);
      }
    }
    read(j, "record_wall_time", c.record_wall_time);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidConfig("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Baseline build_baseline(const ExperimentConfig& cfg, std::uint64_t seed, double sweep_value) {
  const ScenarioConfig& sc = cfg.scenario;
  Scenario scenario = generate_scenario(seed, sc);
  if (cfg.ris_mode == RisMode::NoRIS) scenario.channels.zero_ris_links();

  SchemeOptions scheme;
  scheme.rate_splitting = cfg.scheme == Scheme::RS;
  scheme.optimize_ris =
      cfg.ris_mode == RisMode::ES || cfg.ris_mode == RisMode::MS || cfg.ris_mode == RisMode::RegularRIS;

  const EEParams ee = cfg.ee_params(sweep_value);
  const IQIParams iqi = IQIParams::from_config(sc);
  Baseline b;
  b.truth = {SystemModel::build(scenario.channels, iqi), ee, scheme};
  b.design = b.truth;
  if (cfg.signaling == Signaling::ProperIGSOff) {
    b.design.model = SystemModel::build(scenario.channels, IQIParams::ideal(sc.n_bs, sc.n_u, iqi.noise_power));
    b.design.scheme.structure = CovarianceStructure::Proper;
  }

  // Every baseline of a seed starts from the same coefficients, so paired runs differ only
  // in what they are allowed to optimize.
  const std::uint64_t ris_seed = seed * 0x9e3779b97f4a7c15ULL + 0x51a7;
  RISConfig ris;
  switch (cfg.ris_mode) {
    case RisMode::MS:
      ris = initial_ris(sc.num_ris, sc.n_ris, cfg.t_set, StarMode::ModeSwitching, ris_seed);
      break;
    case RisMode::RegularRIS:
      ris = initial_ris(sc.num_ris, sc.n_ris, cfg.t_set, StarMode::EnergySplitting, ris_seed);
      ris.mode = StarMode::ModeSwitching;
      ris.ms_mask.assign(sc.num_ris, std::vector<ElementMode>(sc.n_ris, ElementMode::ReflectOnly));
      ris = apply_ms_mask(ris);
      break;
    default:
      ris = initial_ris(sc.num_ris, sc.n_ris, cfg.t_set, StarMode::EnergySplitting, ris_seed);
  }
  b.initial = initial_state(b.design, ris);
  return b;
}

ResultRow run_trial(const ExperimentConfig& cfg, std::uint64_t seed, double sweep_value,
                    std::vector<TraceRecord>* trace) {
  ResultRow row;
  row.scheme = to_string(cfg.scheme);
  row.signaling = to_string(cfg.signaling);
  row.ris_mode = to_string(cfg.ris_mode);
  row.t_set = to_string(cfg.t_set);
  row.seed = seed;
  row.sweep_name = cfg.sweep.name;
  row.sweep_value = sweep_value;
  const int L = cfg.scenario.num_cells, K = cfg.scenario.users_per_cell;
  row.ee.assign(L, std::vector<double>(K, std::nan("")));
  row.objective = std::nan("");

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Baseline b = build_baseline(cfg, seed, sweep_value);
    AoResult res = ao_loop(b.design, b.initial, cfg.solver);
    OptState final_state = res.state;
    if (cfg.signaling == Signaling::ProperIGSOff && !refresh_objective(b.truth, final_state))
      throw InfeasibleThresholds("thresholds not met under the true impairments");
    const Evaluation ev = evaluate(b.truth.model.real_channels(final_state.ris), final_state.covs, b.truth.ee);
    row.objective = ev.objective;
    row.ee = ev.ee;
    row.iters = res.state.outer_iter;
    if (trace) *trace = std::move(res.trace);
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  if (cfg.record_wall_time)
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  struct Job {
    std::uint64_t seed;
    double value;
  };
  std::vector<Job> jobs;
  for (auto seed : cfg.seeds)
    for (double v : cfg.sweep.values) jobs.push_back({seed, v});
  std::vector<ResultRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) rows[i] = run_trial(cfg, jobs[i].seed, jobs[i].value);
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

std::string csv_header(int num_cells, int users_per_cell) {
  std::string h = "scheme,signaling,ris_mode,t_set,seed,sweep_name,sweep_value,objective,iters,wall_ms";
  for (int l = 0; l < num_cells; ++l)
    for (int k = 0; k < users_per_cell; ++k) h += ",ee_" + std::to_string(l) + "_" + std::to_string(k);
  return h;
}

std::string csv_line(const ResultRow& r) {
  std::ostringstream os;
  os << r.scheme << ',' << r.signaling << ',' << r.ris_mode << ',' << r.t_set << ',' << r.seed << ','
     << r.sweep_name << ',' << fmt(r.sweep_value) << ',' << fmt(r.objective) << ',' << r.iters << ','
     << fmt(r.wall_ms);
  for (const auto& cell : r.ee)
    for (double e : cell) os << ',' << fmt(e);
  return os.str();
}

json summarize(const std::vector<ResultRow>& rows) {
  std::map<double, std::vector<double>> by_value;
  for (const auto& r : rows) {
    auto& v = by_value[r.sweep_value];
    if (std::isfinite(r.objective)) v.push_back(r.objective);
  }
  json points = json::array();
  for (const auto& [value, objs] : by_value) {
    const double n = static_cast<double>(objs.size());
    double mean = 0.0;
    for (double o : objs) mean += o;
    mean = objs.empty() ? std::nan("") : mean / n;
    double var = 0.0;
    for (double o : objs) var += (o - mean) * (o - mean);
    const double se = objs.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
    json p = {{"sweep_value", value}, {"count", objs.size()}, {"stderr", se}};
    p["mean"] = objs.empty() ? json(nullptr) : json(mean);
    points.push_back(p);
  }
  json s = {{"sweep_name", rows.empty() ? "" : rows.front().sweep_name}, {"points", points}};
  if (!rows.empty()) {
    s["scheme"] = rows.front().scheme;
    s["signaling"] = rows.front().signaling;
    s["ris_mode"] = rows.front().ris_mode;
    s["t_set"] = rows.front().t_set;
  }
  return s;
}

void emit_results(const std::vector<ResultRow>& rows, const std::filesystem::path& dir) {
  if (rows.empty()) throw InvalidConfig("no result rows to write");
  std::filesystem::create_directories(dir);
  const int L = static_cast<int>(rows.front().ee.size());
  const int K = L ? static_cast<int>(rows.front().ee.front().size()) : 0;
  {
    std::ofstream csv(dir / "results.csv");
    csv << csv_header(L, K) << '\n';
    for (const auto& r : rows) csv << csv_line(r) << '\n';
    if (!csv) throw std::runtime_error("failed writing " + (dir / "results.csv").string());
  }
  std::ofstream js(dir / "summary.json");
  js << summarize(rows).dump(2) << '\n';
  if (!js) throw std::runtime_error("failed writing " + (dir / "summary.json").string());
}

void write_trace(const std::vector<TraceRecord>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "outer_iter,step,objective,epsilon,accepted,projected,acceptance_checked\n";
  for (const auto& t : trace)
    out << t.outer_iter << ',' << to_string(t.step) << ',' << fmt(t.objective) << ',' << fmt(t.epsilon) << ','
        << t.accepted << ',' << t.projected << ',' << t.acceptance_checked << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

} // namespace starris
