// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "starris/wl_algebra.hpp"

namespace starris {

enum class UserSide { Reflect, Transmit };

/// Feasibility set of a STAR-RIS element pair (theta_r, theta_t).
///   TU: |r|^2 + |t|^2 <= 1
///   TI: |r|^2 + |t|^2 == 1
///   TN: TI and |r +- t|^2 <= 1
enum class FeasibilitySet { TU, TI, TN };

enum class StarMode { EnergySplitting, ModeSwitching };

enum class ElementMode { ReflectOnly, TransmitOnly };

std::string to_string(FeasibilitySet s);
std::string to_string(StarMode m);
FeasibilitySet parse_feasibility_set(const std::string& s);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

/// Scenario geometry and propagation constants. Path loss in dB is
/// `ref_db + 10 * exponent * log10(d)` with d in meters.
struct ScenarioConfig {
  int num_cells = 2;       // L
  int users_per_cell = 2;  // K
  int num_ris = 2;         // M
  int n_bs = 2;
  int n_u = 2;
  int n_ris = 4;

  double cell_radius = 100.0;
  double user_min_distance = 10.0;

  double direct_pl_ref_db = 30.0;
  double direct_pl_exponent = 3.5;
  double ris_pl_ref_db = 30.0;
  double ris_pl_exponent = 2.2;
  double rician_k_db = 3.0;
  double noise_power_dbm = -94.0;

  /// Share of each cell's users placed on the transmit side of every RIS.
  double transmit_fraction = 0.0;

  // I/Q imbalance, identical on every chain of the given side.
  double iqi_tx_amplitude = 1.1;
  double iqi_tx_phase_deg = 10.0;
  double iqi_rx_amplitude = 1.1;
  double iqi_rx_phase_deg = 10.0;

  void validate() const;
  double noise_power_watts() const;
};

struct NetworkTopology {
  int num_cells = 0;
  int users_per_cell = 0;
  int num_ris = 0;
  int n_bs = 0;
  int n_u = 0;
  int n_ris = 0;
  std::vector<Point2> bs;
  std::vector<Point2> ris;
  std::vector<std::vector<Point2>> users;  // [l][k]
};

/// Complex channels of one realization.
struct ChannelSet {
  std::vector<std::vector<std::vector<ComplexMatrix>>> g_user;  // [l][k][m]: n_u x n_ris
  std::vector<std::vector<ComplexMatrix>> g_bs;                 // [m][i]: n_ris x n_bs
  std::vector<std::vector<std::vector<ComplexMatrix>>> direct;  // [l][k][i]: n_u x n_bs
  std::vector<std::vector<std::vector<UserSide>>> user_side;    // [l][k][m]

  int num_cells() const { return static_cast<int>(direct.size()); }
  int users_per_cell() const { return direct.empty() ? 0 : static_cast<int>(direct[0].size()); }
  int num_ris() const { return static_cast<int>(g_bs.size()); }
  int n_bs() const;
  int n_u() const;
  int n_ris() const;

  /// Removes every path through the RIS (cascaded channels set to zero).
  void zero_ris_links();
};

struct Scenario {
  NetworkTopology topology;
  ChannelSet channels;
};

/// Diagonal reflection and transmission coefficients of every RIS.
struct RISConfig {
  std::vector<ComplexVector> theta_r;  // [m], length n_ris
  std::vector<ComplexVector> theta_t;
  FeasibilitySet set = FeasibilitySet::TI;
  StarMode mode = StarMode::EnergySplitting;
  std::vector<std::vector<ElementMode>> ms_mask;  // [m][n], MS only

  int num_ris() const { return static_cast<int>(theta_r.size()); }
  int n_ris() const { return theta_r.empty() ? 0 : static_cast<int>(theta_r[0].size()); }

  const ComplexVector& theta(int m, UserSide side) const {
    return side == UserSide::Reflect ? theta_r[m] : theta_t[m];
  }

  static RISConfig zeros(int num_ris, int n_ris, FeasibilitySet set, StarMode mode);

  /// Checks the invariants of `set` (and the MS mask) to `tol`.
  bool is_feasible(double tol = 1e-9) const;
};

struct IQIParams {
  RealVector tx_amplitude;  // per BS chain
  RealVector tx_phase;      // radians
  RealVector rx_amplitude;  // per user chain
  RealVector rx_phase;
  double noise_power = 1.0;  // watts

  static IQIParams ideal(int n_bs, int n_u, double noise_power);
  static IQIParams from_config(const ScenarioConfig& cfg);
};

Scenario generate_scenario(std::uint64_t seed, const ScenarioConfig& cfg);

/// H_{lk,i} = sum_m G_{lk,m} diag(theta_side) G_{m,i} + F_{lk,i}.
ComplexMatrix effective_channel(const ChannelSet& ch, const RISConfig& ris, int l, int k, int i);

/// Gamma1 = (I + g e^{j phi}) / 2, Gamma2 = (I - g e^{-j phi}) / 2.
WidelyLinearMap iqi_gammas(double g, double phi, Eigen::Index dim);
WidelyLinearMap iqi_gammas(const RealVector& g, const RealVector& phi);

/// Real-domain channel W_rx * R(H) * W_tx.
RealMatrix end_to_end_real_channel(const ComplexMatrix& h, const WidelyLinearMap& tx,
                                   const WidelyLinearMap& rx);

/// Real-domain noise covariance W_rx (sigma^2 / 2 I) W_rx^T of proper antenna noise.
RealMatrix noise_covariance(const WidelyLinearMap& rx, double noise_power);

} // namespace starris
