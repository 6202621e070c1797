// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/special_functions/lambert_w.hpp>

#include "oracles.hpp"
#include "starris/experiments.hpp"
#include "starris/surrogates.hpp"

using namespace starris;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Tracks the worst value of a quantity that must stay below a tolerance.
struct Worst {
  double value = -INFINITY;
  void operator()(double v) { value = std::max(value, v); }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. monotone AO traces

Outcome monotone_convergence() {
  constexpr int kSeeds = 17;  // 17 seeds x 3 sets x 2 modes = 102 runs
  SolverSettings settings;
  settings.max_outer = 20;
  Worst drop;
  int runs = 0, over = 0;
  for (FeasibilitySet set : {FeasibilitySet::TU, FeasibilitySet::TI, FeasibilitySet::TN})
    for (StarMode mode : {StarMode::EnergySplitting, StarMode::ModeSwitching})
      for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        const Instance inst = testing::make_instance(seed, testing::small_scenario(2, 2, 2, 2, 2, 4));
        const AoResult ao = ao_loop(inst, initial_state(inst, initial_ris(2, 4, set, mode, seed)), settings);
        for (std::size_t i = 1; i < ao.trace.size(); ++i) drop(ao.trace[i - 1].objective - ao.trace[i].objective);
        if (ao.state.outer_iter > settings.max_outer) ++over;
        ++runs;
      }
  Outcome o;
  o.pass = drop.value <= 1e-9 && over == 0;
  o.detail = std::to_string(runs) + " runs, worst half-step drop " + fmt(drop.value) + ", over budget " +
             std::to_string(over);
  return o;
}

// ---------------------------------------------------------------------------
// 2. surrogate tightness, lower bound and gradient

CovarianceSet axpy(const CovarianceSet& a, double h, const CovarianceSet& d) {
  CovarianceSet out = a;
  for (int l = 0; l < a.num_cells(); ++l) {
    out.p_common[l] += h * d.p_common[l];
    for (int k = 0; k < a.users_per_cell(); ++k) out.p_private[l][k] += h * d.p_private[l][k];
  }
  return out;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-3); }

Outcome surrogate_correctness() {
  Worst tight, slack, grad;
  constexpr int L = 2, K = 2, kSamples = 200;
  constexpr double h = 1e-6;
  std::uint64_t seed = 100;
  for (FeasibilitySet set : {FeasibilitySet::TU, FeasibilitySet::TI, FeasibilitySet::TN})
    for (StarMode mode : {StarMode::EnergySplitting, StarMode::ModeSwitching}) {
      ++seed;
      const Instance inst = testing::make_instance(seed, testing::small_scenario(L, K, 1, 2, 2, 4));
      const SystemModel& model = inst.model;
      std::mt19937_64 rng(seed);
      RISConfig base = RISConfig::zeros(1, 4, set, mode);
      if (mode == StarMode::ModeSwitching)
        for (int n = 0; n < 4; ++n) base.ms_mask[0][n] = n % 2 ? ElementMode::TransmitOnly : ElementMode::ReflectOnly;
      const RISConfig ris = testing::random_ris(rng, base);
      const CovarianceSet covs = testing::random_covariances(rng, L, K, 2, 1.0);
      const RealChannels ch = model.real_channels(ris);

      // covariance step
      const CovarianceExpansion pe = CovarianceExpansion::at(ch, covs);
      for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
          tight(std::abs(surrogate_private_rate_P(pe, covs, l, k) - private_rate(ch, covs, l, k)));
          tight(std::abs(surrogate_common_rate_P(pe, covs, l, k) - common_rate_bound(ch, covs, l, k)));
        }
      for (int s = 0; s < kSamples; ++s) {
        const CovarianceSet c = testing::random_covariances(rng, L, K, 2, 1.0);
        for (int l = 0; l < L; ++l)
          for (int k = 0; k < K; ++k) {
            slack(surrogate_private_rate_P(pe, c, l, k) - private_rate(ch, c, l, k));
            slack(surrogate_common_rate_P(pe, c, l, k) - common_rate_bound(ch, c, l, k));
          }
      }
      for (int s = 0; s < 3; ++s) {
        CovarianceSet d = CovarianceSet::zeros(L, K, 2);
        auto sym = [&] {
          const RealMatrix a = testing::random_real(rng, 4, 4);
          return RealMatrix(0.5 * (a + a.transpose()));
        };
        for (int l = 0; l < L; ++l) {
          d.p_common[l] = sym();
          for (int k = 0; k < K; ++k) d.p_private[l][k] = sym();
        }
        const CovarianceSet up = axpy(covs, h, d), dn = axpy(covs, -h, d);
        for (int l = 0; l < L; ++l)
          for (int k = 0; k < K; ++k) {
            grad(rel_gap(surrogate_private_rate_P(pe, up, l, k) - surrogate_private_rate_P(pe, dn, l, k),
                         private_rate(ch, up, l, k) - private_rate(ch, dn, l, k)));
            grad(rel_gap(surrogate_common_rate_P(pe, up, l, k) - surrogate_common_rate_P(pe, dn, l, k),
                         common_rate_bound(ch, up, l, k) - common_rate_bound(ch, dn, l, k)));
          }
      }

      // RIS step
      const RisExpansion te = RisExpansion::at(model, ris, covs);
      for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
          tight(std::abs(surrogate_private_rate_theta(te, ris, l, k) - private_rate(ch, covs, l, k)));
          tight(std::abs(surrogate_common_rate_theta(te, ris, l, k) - common_rate_bound(ch, covs, l, k)));
        }
      for (int s = 0; s < kSamples; ++s) {
        const RISConfig r = testing::random_ris(rng, ris);
        const RealChannels cr = model.real_channels(r);
        for (int l = 0; l < L; ++l)
          for (int k = 0; k < K; ++k) {
            slack(surrogate_private_rate_theta(te, r, l, k) - private_rate(cr, covs, l, k));
            slack(surrogate_common_rate_theta(te, r, l, k) - common_rate_bound(cr, covs, l, k));
          }
      }
      const RealVector x0 = te.layout.pack(ris);
      for (int s = 0; s < 3; ++s) {
        const RealVector d = testing::random_real(rng, te.layout.num_vars(), 1);
        const RISConfig up = te.layout.unpack(x0 + h * d, ris), dn = te.layout.unpack(x0 - h * d, ris);
        const RealChannels cu = model.real_channels(up), cd = model.real_channels(dn);
        for (int l = 0; l < L; ++l)
          for (int k = 0; k < K; ++k) {
            grad(rel_gap(surrogate_private_rate_theta(te, up, l, k) - surrogate_private_rate_theta(te, dn, l, k),
                         private_rate(cu, covs, l, k) - private_rate(cd, covs, l, k)));
            grad(rel_gap(surrogate_common_rate_theta(te, up, l, k) - surrogate_common_rate_theta(te, dn, l, k),
                         common_rate_bound(cu, covs, l, k) - common_rate_bound(cd, covs, l, k)));
          }
      }
    }
  Outcome o;
  o.pass = tight.value <= 1e-8 && slack.value <= 1e-7 && grad.value <= 1e-3;
  o.detail = "tightness " + fmt(tight.value) + ", worst bound violation " + fmt(slack.value) +
             ", worst gradient rel. error " + fmt(grad.value);
  return o;
}

// ---------------------------------------------------------------------------
// 3. scalar fractional program against its closed form

Instance scalar_instance(double gain, double p_c, double eta, double p_max) {
  ChannelSet ch;
  ch.g_user = {{{ComplexMatrix::Zero(1, 1)}}};
  ch.g_bs = {{ComplexMatrix::Zero(1, 1)}};
  ch.direct = {{{ComplexMatrix::Constant(1, 1, std::sqrt(gain))}}};
  ch.user_side = {{{UserSide::Reflect}}};
  Instance inst{SystemModel::build(ch, IQIParams::ideal(1, 1, 1.0)), EEParams::defaults(1, 1), SchemeOptions{}};
  inst.ee.p_c = p_c;
  inst.ee.eta = eta;
  inst.ee.p_max = p_max;
  inst.scheme.rate_splitting = false;
  inst.scheme.optimize_ris = false;
  return inst;
}

// argmax of log2(1 + a p) / (p_c + eta p): the stationarity condition solves through Lambert W.
double analytic_ee(double a, double p_c, double eta, double p_max) {
  const double u = std::exp(boost::math::lambert_w0((a * p_c / eta - 1.0) / std::numbers::e) + 1.0);
  const double p = std::min((u - 1.0) / a, p_max);
  return std::log2(1.0 + a * p) / (p_c + eta * p);
}

Outcome dinkelbach_oracle() {
  struct Case {
    double a, p_c, eta, p_max;
  };
  Worst err, residual;
  for (const Case c : {Case{10.0, 1.0, 2.5, 1.0}, Case{50.0, 0.5, 1.0, 1.0}, Case{2.0, 5.0, 1.0, 0.5},
                       Case{300.0, 2.0, 4.0, 2.0}}) {
    const Instance inst = scalar_instance(c.a, c.p_c, c.eta, c.p_max);
    const OptState s = initial_state(inst, RISConfig::zeros(1, 1, FeasibilitySet::TI, StarMode::EnergySplitting));
    const OptState next = solve_p_step(inst, s, SolverSettings{});
    const double ref = analytic_ee(c.a, c.p_c, c.eta, c.p_max);
    err(std::abs(next.objective - ref) / ref);
    // fixed point: max over the covariance of r - lambda * cost vanishes at the returned ratio
    const CovarianceExpansion exp = CovarianceExpansion::at(inst.model.real_channels(next.ris), next.covs);
    residual(std::abs(parametric_subproblem(inst, exp, next.covs, next.objective, SolverSettings{}).value));
  }
  Outcome o;
  o.pass = err.value <= 1e-5 && residual.value <= 1e-6;
  o.detail = "worst rel. EE error " + fmt(err.value) + ", worst fixed-point residual " + fmt(residual.value);
  return o;
}

// ---------------------------------------------------------------------------
// 4. real-domain rate against complex log det with ideal hardware

Outcome rate_convention() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  Worst err;
  for (int rep = 0; rep < 50; ++rep) {
    const int nb = dim(rng), nu = dim(rng);
    const double sigma2 = u(rng), power = u(rng);
    ChannelSet ch;
    const ComplexMatrix h = testing::random_complex(rng, nu, nb);
    ch.g_user = {{{ComplexMatrix::Zero(nu, 1)}}};
    ch.g_bs = {{ComplexMatrix::Zero(1, nb)}};
    ch.direct = {{{h}}};
    ch.user_side = {{{UserSide::Reflect}}};
    const SystemModel model = SystemModel::build(ch, IQIParams::ideal(nb, nu, sigma2));
    CovarianceSet covs = CovarianceSet::zeros(1, 1, nb);
    ComplexMatrix q;
    covs.p_private[0][0] = testing::random_proper_covariance(rng, nb, power, &q);
    const double real_rate =
        private_rate(model.real_channels(RISConfig::zeros(1, 1, FeasibilitySet::TI, StarMode::EnergySplitting)),
                     covs, 0, 0);
    err(std::abs(real_rate - testing::complex_capacity(h, q, sigma2)));
  }
  Outcome o;
  o.pass = err.value <= 1e-9;
  o.detail = "50 instances, worst abs. error " + fmt(err.value);
  return o;
}

// ---------------------------------------------------------------------------
// 5. unit-modulus feasibility of accepted RIS iterates

Outcome projection_feasibility() {
  Worst modulus, coupling;
  int accepted = 0;
  SolverSettings settings;
  for (FeasibilitySet set : {FeasibilitySet::TI, FeasibilitySet::TN})
    for (StarMode mode : {StarMode::EnergySplitting, StarMode::ModeSwitching})
      for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance inst = testing::make_instance(seed + 500, testing::small_scenario(2, 2, 2, 2, 2, 4));
        OptState s = initial_state(inst, initial_ris(2, 4, set, mode, seed));
        for (int it = 0; it < 4; ++it) {
          s = solve_p_step(inst, s, settings);
          ThetaStepInfo info;
          s = solve_theta_step(inst, s, settings, &info);
          if (!info.accepted) continue;
          ++accepted;
          for (int m = 0; m < inst.model.num_ris(); ++m)
            for (int n = 0; n < inst.model.n_ris(); ++n) {
              const cdouble r = s.ris.theta_r[m](n), t = s.ris.theta_t[m](n);
              modulus(std::abs(std::norm(r) + std::norm(t) - 1.0));
              if (set == FeasibilitySet::TN) {
                coupling(std::norm(r + t) - 1.0);
                coupling(std::norm(r - t) - 1.0);
              }
            }
        }
      }
  Outcome o;
  o.pass = accepted > 0 && modulus.value <= 1e-9 && coupling.value <= 1e-9;
  o.detail = std::to_string(accepted) + " accepted iterates, worst |modulus - 1| " + fmt(modulus.value) +
             ", worst T_N excess " + fmt(coupling.value);
  return o;
}

// ---------------------------------------------------------------------------
// 6 and 7. paired trend comparisons

std::vector<double> objectives(ExperimentConfig cfg, Scheme scheme, Signaling sig, RisMode mode) {
  cfg.scheme = scheme;
  cfg.signaling = sig;
  cfg.ris_mode = mode;
  std::vector<double> out;
  for (const auto& row : run_sweep(cfg)) out.push_back(row.objective);
  return out;
}

// Mean of a - b over seeds where both runs succeeded; nan when none did.
double paired_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::isfinite(a[i]) && std::isfinite(b[i])) {
      sum += a[i] - b[i];
      ++n;
    }
  return n ? sum / n : std::nan("");
}

double mean(const std::vector<double>& a) {
  double sum = 0.0;
  int n = 0;
  for (double v : a)
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  return n ? sum / n : std::nan("");
}

ExperimentConfig trend_config(int L, int K, int M, int n_ris, double transmit_fraction) {
  ExperimentConfig c;
  c.scenario.num_cells = L;
  c.scenario.users_per_cell = K;
  c.scenario.num_ris = M;
  c.scenario.n_bs = 2;
  c.scenario.n_u = 2;
  c.scenario.n_ris = n_ris;
  c.scenario.transmit_fraction = transmit_fraction;
  c.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) c.seeds.push_back(s);
  c.t_set = FeasibilitySet::TI;
  c.sweep.values = {1.0};
  c.solver.max_outer = 10;
  c.record_wall_time = false;
  return c;
}

Outcome fig2_trend() {
  const ExperimentConfig cfg = trend_config(2, 4, 2, 20, 0.0);
  const auto rs = objectives(cfg, Scheme::RS, Signaling::IGS, RisMode::ES);
  const auto tin = objectives(cfg, Scheme::TIN, Signaling::IGS, RisMode::ES);
  const auto rnd = objectives(cfg, Scheme::RS, Signaling::IGS, RisMode::RandomRIS);
  const auto none = objectives(cfg, Scheme::RS, Signaling::IGS, RisMode::NoRIS);
  const auto unaware = objectives(cfg, Scheme::RS, Signaling::ProperIGSOff, RisMode::RandomRIS);
  const double g1 = paired_gap(rs, tin), g2 = paired_gap(tin, rnd), g3 = paired_gap(rnd, none),
               g4 = paired_gap(rs, unaware);
  Outcome o;
  o.pass = g1 >= 0.0 && g2 >= 0.0 && g3 >= 0.0 && g4 > 0.0;
  o.detail = "means RS " + fmt(mean(rs)) + ", TIN " + fmt(mean(tin)) + ", random " + fmt(mean(rnd)) + ", none " +
             fmt(mean(none)) + ", IQI-unaware " + fmt(mean(unaware)) + "; paired gaps " + fmt(g1) + ", " + fmt(g2) +
             ", " + fmt(g3) + ", IGS-unaware " + fmt(g4) + " (unaware vs IGS random RIS " +
             fmt(paired_gap(rnd, unaware)) + ")";
  return o;
}

Outcome fig3_trend() {
  const ExperimentConfig cfg = trend_config(1, 8, 1, 24, 0.5);
  const auto es = objectives(cfg, Scheme::RS, Signaling::IGS, RisMode::ES);
  const auto ms = objectives(cfg, Scheme::RS, Signaling::IGS, RisMode::MS);
  const auto reg = objectives(cfg, Scheme::RS, Signaling::IGS, RisMode::RegularRIS);
  const auto none = objectives(cfg, Scheme::RS, Signaling::IGS, RisMode::NoRIS);
  const double g1 = paired_gap(es, ms), g2 = paired_gap(ms, reg), g3 = paired_gap(reg, none);
  const double ratio = mean(ms) / mean(es);
  Outcome o;
  o.pass = g1 >= 0.0 && g2 >= 0.0 && g3 >= 0.0 && ratio >= 0.9;
  o.detail = "means ES " + fmt(mean(es)) + ", MS " + fmt(mean(ms)) + ", regular " + fmt(mean(reg)) + ", none " +
             fmt(mean(none)) + "; paired gaps " + fmt(g1) + ", " + fmt(g2) + ", " + fmt(g3) + "; MS/ES " + fmt(ratio);
  return o;
}

// ---------------------------------------------------------------------------
// 8. EE arithmetic

Outcome ee_arithmetic() {
  bool ok = true;
  ok &= energy_efficiency(1.0, 1.0, 1.0, 0.0, 0.0, 1) == 1.0;
  ok &= energy_efficiency(1.0, 2.0, 1.0, 0.0, 0.0, 1) == 0.5 * energy_efficiency(1.0, 1.0, 1.0, 0.0, 0.0, 1);
  const double e = energy_efficiency(2.0, 0.1, 2.0, 0.2, 0.4, 4);
  ok &= std::abs(e - 2.0 / 0.7) <= 1e-15 * (2.0 / 0.7);

  CovarianceSet covs = CovarianceSet::zeros(1, 4, 1);
  covs.p_private[0][2] = 0.1 * RealMatrix::Identity(2, 2);
  covs.p_common[0] = 0.2 * RealMatrix::Identity(2, 2);
  EEParams ee = EEParams::defaults(1, 4);
  ee.p_c = 0.1;
  ee.eta = 2.0;
  ok &= std::abs(energy_efficiency(0, 2, 2.0, covs, ee) - 2.0 / 0.7) <= 1e-15 * (2.0 / 0.7);
  Outcome o;
  o.pass = ok;
  o.detail = "r=2 example gives " + fmt(e);
  return o;
}

} // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"AC1 monotone convergence", monotone_convergence},
      {"AC2 surrogate correctness", surrogate_correctness},
      {"AC3 Dinkelbach closed form", dinkelbach_oracle},
      {"AC4 rate convention", rate_convention},
      {"AC5 feasibility after projection", projection_feasibility},
      {"AC6 multicell trend", fig2_trend},
      {"AC7 STAR-RIS mode trend", fig3_trend},
      {"AC8 EE arithmetic", ee_arithmetic},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
