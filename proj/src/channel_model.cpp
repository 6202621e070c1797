// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include "starris/channel_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace starris {

namespace {

constexpr double kPi = std::numbers::pi;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double path_gain(double ref_db, double exponent, double d) {
  return db_to_linear(-(ref_db + 10.0 * exponent * std::log10(std::max(d, 1.0))));
}

ComplexMatrix rayleigh(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  ComplexMatrix h(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) h(r, c) = {n(rng), n(rng)};
  return h;
}

// Half-wavelength ULA along the x axis; psi is the direction angle.
ComplexVector steering(int n, double psi) {
  ComplexVector a(n);
  for (int i = 0; i < n; ++i) a(i) = std::polar(1.0, kPi * i * std::cos(psi));
  return a;
}

double direction(const Point2& from, const Point2& to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

// Rician link from `tx` to `rx` with unit-modulus LOS component.
ComplexMatrix rician(std::mt19937_64& rng, int n_rx, int n_tx, const Point2& rx, const Point2& tx,
                     double k_factor) {
  const ComplexMatrix los =
      steering(n_rx, direction(rx, tx)) * steering(n_tx, direction(tx, rx)).adjoint();
  const ComplexMatrix nlos = rayleigh(rng, n_rx, n_tx);
  return std::sqrt(k_factor / (k_factor + 1.0)) * los + std::sqrt(1.0 / (k_factor + 1.0)) * nlos;
}

} // namespace

std::string to_string(FeasibilitySet s) {
  switch (s) {
    case FeasibilitySet::TU: return "T_U";
    case FeasibilitySet::TI: return "T_I";
    case FeasibilitySet::TN: return "T_N";
  }
  return "?";
}

std::string to_string(StarMode m) { return m == StarMode::EnergySplitting ? "ES" : "MS"; }

FeasibilitySet parse_feasibility_set(const std::string& s) {
  if (s == "T_U") return FeasibilitySet::TU;
  if (s == "T_I") return FeasibilitySet::TI;
  if (s == "T_N") return FeasibilitySet::TN;
  throw InvalidConfig("unknown feasibility set '" + s + "'");
}

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void ScenarioConfig::validate() const {
  if (num_cells < 1 || users_per_cell < 1 || num_ris < 1 || n_bs < 1 || n_u < 1 || n_ris < 1)
    throw InvalidConfig("scenario dimensions must be positive");
  if (!(cell_radius > 0.0) || user_min_distance < 0.0 || user_min_distance > cell_radius)
    throw InvalidConfig("invalid cell geometry");
  if (direct_pl_exponent < 0.0 || ris_pl_exponent < 0.0)
    throw InvalidConfig("path-loss exponents must be nonnegative");
  if (transmit_fraction < 0.0 || transmit_fraction > 1.0)
    throw InvalidConfig("transmit_fraction must lie in [0, 1]");
  if (!(iqi_tx_amplitude > 0.0) || !(iqi_rx_amplitude > 0.0))
    throw InvalidConfig("IQI amplitude imbalance must be positive");
}

double ScenarioConfig::noise_power_watts() const { return db_to_linear(noise_power_dbm - 30.0); }

int ChannelSet::n_bs() const { return direct.empty() ? 0 : static_cast<int>(direct[0][0][0].cols()); }
int ChannelSet::n_u() const { return direct.empty() ? 0 : static_cast<int>(direct[0][0][0].rows()); }
int ChannelSet::n_ris() const { return g_bs.empty() ? 0 : static_cast<int>(g_bs[0][0].rows()); }

void ChannelSet::zero_ris_links() {
  for (auto& cell : g_user)
    for (auto& user : cell)
      for (auto& g : user) g.setZero();
  for (auto& ris : g_bs)
    for (auto& g : ris) g.setZero();
}

RISConfig RISConfig::zeros(int num_ris, int n_ris, FeasibilitySet set, StarMode mode) {
  RISConfig r;
  r.theta_r.assign(num_ris, ComplexVector::Zero(n_ris));
  r.theta_t.assign(num_ris, ComplexVector::Zero(n_ris));
  r.set = set;
  r.mode = mode;
  if (mode == StarMode::ModeSwitching)
    r.ms_mask.assign(num_ris, std::vector<ElementMode>(n_ris, ElementMode::ReflectOnly));
  return r;
}

bool RISConfig::is_feasible(double tol) const {
  for (int m = 0; m < num_ris(); ++m) {
    for (int n = 0; n < n_ris(); ++n) {
      const cdouble r = theta_r[m](n);
      const cdouble t = theta_t[m](n);
      const double total = std::norm(r) + std::norm(t);
      if (!std::isfinite(total)) return false;
      if (mode == StarMode::ModeSwitching) {
        const bool reflect = ms_mask.at(m).at(n) == ElementMode::ReflectOnly;
        if (reflect ? t != 0.0 : r != 0.0) return false;
      }
      switch (set) {
        case FeasibilitySet::TU:
          if (total > 1.0 + tol) return false;
          break;
        case FeasibilitySet::TN:
          if (std::norm(r + t) > 1.0 + tol || std::norm(r - t) > 1.0 + tol) return false;
          [[fallthrough]];
        case FeasibilitySet::TI:
          if (std::abs(total - 1.0) > tol) return false;
          break;
      }
    }
  }
  return true;
}

IQIParams IQIParams::ideal(int n_bs, int n_u, double noise_power) {
  return {RealVector::Ones(n_bs), RealVector::Zero(n_bs), RealVector::Ones(n_u),
          RealVector::Zero(n_u), noise_power};
}

IQIParams IQIParams::from_config(const ScenarioConfig& cfg) {
  const double deg = kPi / 180.0;
  return {RealVector::Constant(cfg.n_bs, cfg.iqi_tx_amplitude),
          RealVector::Constant(cfg.n_bs, cfg.iqi_tx_phase_deg * deg),
          RealVector::Constant(cfg.n_u, cfg.iqi_rx_amplitude),
          RealVector::Constant(cfg.n_u, cfg.iqi_rx_phase_deg * deg), cfg.noise_power_watts()};
}

Scenario generate_scenario(std::uint64_t seed, const ScenarioConfig& cfg) {
  cfg.validate();
  const int L = cfg.num_cells, K = cfg.users_per_cell, M = cfg.num_ris;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5eedu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Scenario sc;
  NetworkTopology& topo = sc.topology;
  topo.num_cells = L;
  topo.users_per_cell = K;
  topo.num_ris = M;
  topo.n_bs = cfg.n_bs;
  topo.n_u = cfg.n_u;
  topo.n_ris = cfg.n_ris;

  const double R = cfg.cell_radius;
  for (int l = 0; l < L; ++l) topo.bs.push_back({2.0 * R * l, 0.0});

  // RISs sit on the edge of cell (m mod L), spread in angle when a cell hosts several.
  const int per_cell = (M + L - 1) / L;
  for (int m = 0; m < M; ++m) {
    const Point2& c = topo.bs[m % L];
    const double ang = kPi / 2.0 + 2.0 * kPi * (m / L) / per_cell;
    topo.ris.push_back({c.x + R * std::cos(ang), c.y + R * std::sin(ang)});
  }

  const double r2min = cfg.user_min_distance * cfg.user_min_distance;
  topo.users.assign(L, {});
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const double rho = std::sqrt(r2min + unit(rng) * (R * R - r2min));
      const double ang = 2.0 * kPi * unit(rng);
      topo.users[l].push_back({topo.bs[l].x + rho * std::cos(ang), topo.bs[l].y + rho * std::sin(ang)});
    }
  }

  const double kf = db_to_linear(cfg.rician_k_db);
  ChannelSet& ch = sc.channels;

  ch.g_bs.assign(M, {});
  for (int m = 0; m < M; ++m) {
    for (int i = 0; i < L; ++i) {
      const double gain = path_gain(cfg.ris_pl_ref_db, cfg.ris_pl_exponent, distance(topo.ris[m], topo.bs[i]));
      ch.g_bs[m].push_back(std::sqrt(gain) *
                           rician(rng, cfg.n_ris, cfg.n_bs, topo.ris[m], topo.bs[i], kf));
    }
  }

  ch.g_user.assign(L, std::vector<std::vector<ComplexMatrix>>(K));
  ch.direct.assign(L, std::vector<std::vector<ComplexMatrix>>(K));
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const Point2& u = topo.users[l][k];
      for (int m = 0; m < M; ++m) {
        const double gain = path_gain(cfg.ris_pl_ref_db, cfg.ris_pl_exponent, distance(u, topo.ris[m]));
        ch.g_user[l][k].push_back(std::sqrt(gain) * rician(rng, cfg.n_u, cfg.n_ris, u, topo.ris[m], kf));
      }
      for (int i = 0; i < L; ++i) {
        const double gain =
            path_gain(cfg.direct_pl_ref_db, cfg.direct_pl_exponent, distance(u, topo.bs[i]));
        ch.direct[l][k].push_back(std::sqrt(gain) * rayleigh(rng, cfg.n_u, cfg.n_bs));
      }
    }
  }

  const int n_transmit = static_cast<int>(std::lround(cfg.transmit_fraction * K));
  ch.user_side.assign(L, std::vector<std::vector<UserSide>>(K));
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k)
      ch.user_side[l][k].assign(M, k >= K - n_transmit ? UserSide::Transmit : UserSide::Reflect);
  return sc;
}

ComplexMatrix effective_channel(const ChannelSet& ch, const RISConfig& ris, int l, int k, int i) {
  ComplexMatrix h = ch.direct[l][k][i];
  for (int m = 0; m < ch.num_ris(); ++m) {
    const ComplexVector& theta = ris.theta(m, ch.user_side[l][k][m]);
    h.noalias() += ch.g_user[l][k][m] * theta.asDiagonal() * ch.g_bs[m][i];
  }
  return h;
}

WidelyLinearMap iqi_gammas(double g, double phi, Eigen::Index dim) {
  return iqi_gammas(RealVector::Constant(dim, g), RealVector::Constant(dim, phi));
}

WidelyLinearMap iqi_gammas(const RealVector& g, const RealVector& phi) {
  if (g.size() != phi.size()) throw DimensionMismatch("iqi_gammas: parameter lengths differ");
  const auto n = g.size();
  WidelyLinearMap w{ComplexMatrix::Zero(n, n), ComplexMatrix::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(g(i) > 0.0)) throw InvalidConfig("iqi_gammas: amplitude imbalance must be positive");
    w.gamma1(i, i) = 0.5 * (1.0 + std::polar(g(i), phi(i)));
    w.gamma2(i, i) = 0.5 * (1.0 - std::polar(g(i), -phi(i)));
  }
  return w;
}

RealMatrix end_to_end_real_channel(const ComplexMatrix& h, const WidelyLinearMap& tx,
                                   const WidelyLinearMap& rx) {
  if (rx.cols() != h.rows() || h.cols() != tx.rows())
    throw DimensionMismatch("end_to_end_real_channel: chain dimensions do not match");
  return wl_real_decompose(rx) * real_decompose(h) * wl_real_decompose(tx);
}

RealMatrix noise_covariance(const WidelyLinearMap& rx, double noise_power) {
  const RealMatrix w = wl_real_decompose(rx);
  return symmetrize(0.5 * noise_power * w * w.transpose());
}

} // namespace starris
