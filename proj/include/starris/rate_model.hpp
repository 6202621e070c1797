// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#pragma once

#include <optional>
#include <vector>

#include "starris/channel_model.hpp"

namespace starris {

/// Real-domain transmit covariances (watts) and the per-user share of each cell's
/// common rate (bits/s/Hz).
struct CovarianceSet {
  std::vector<std::vector<RealMatrix>> p_private;      // [l][k], 2 n_bs square
  std::vector<RealMatrix> p_common;                    // [l]
  std::vector<std::vector<double>> r_common_alloc;     // [l][k]

  static CovarianceSet zeros(int num_cells, int users_per_cell, int n_bs);

  int num_cells() const { return static_cast<int>(p_private.size()); }
  int users_per_cell() const { return p_private.empty() ? 0 : static_cast<int>(p_private[0].size()); }
  Eigen::Index dim() const { return p_common.empty() ? 0 : p_common[0].rows(); }

  /// P_i = P_{c,i} + sum_k P_{ik}.
  RealMatrix total(int i) const;
  double bs_power(int i) const { return total(i).trace(); }

  bool is_feasible(double p_max, double tol = 1e-9) const;
};

struct EEParams {
  double p_c = 1.0;    // constant consumption per user (W)
  double eta = 2.5;    // inverse power-amplifier efficiency
  double p_max = 1.0;  // per-BS power budget (W)
  std::vector<std::vector<double>> alpha;  // [l][k] > 0
  std::vector<std::vector<double>> r_th;   // [l][k] >= 0

  static EEParams defaults(int num_cells, int users_per_cell);
  void validate() const;

  /// Denominator of the energy efficiency of user (l,k).
  double consumed_power(const CovarianceSet& covs, int l, int k) const;
};

/// End-to-end real-domain channels for one RIS configuration. Channels are scaled by
/// 1/sigma and the noise covariance is built for unit noise power, which leaves all
/// log-det rates unchanged.
struct RealChannels {
  std::vector<std::vector<std::vector<RealMatrix>>> h;  // [l][k][i]: 2 n_u x 2 n_bs
  std::vector<std::vector<RealMatrix>> noise;           // [l][k]: 2 n_u square

  int num_cells() const { return static_cast<int>(h.size()); }
  int users_per_cell() const { return h.empty() ? 0 : static_cast<int>(h[0].size()); }
};

/// A channel realization together with its transceiver impairments.
struct SystemModel {
  ChannelSet channels;
  WidelyLinearMap tx;  // per BS
  WidelyLinearMap rx;  // per user
  double noise_power = 1.0;

  static SystemModel build(ChannelSet channels, const IQIParams& iqi);

  int num_cells() const { return channels.num_cells(); }
  int users_per_cell() const { return channels.users_per_cell(); }
  int num_ris() const { return channels.num_ris(); }
  int n_bs() const { return channels.n_bs(); }
  int n_u() const { return channels.n_u(); }
  int n_ris() const { return channels.n_ris(); }
  double channel_scale() const;

  RealChannels real_channels(const RISConfig& ris) const;
};

struct RateReport {
  std::vector<std::vector<double>> r_p;      // private rate
  std::vector<std::vector<double>> r_c_bar;  // max decodable common rate at each user
  std::vector<double> r_c_cell;              // min_k r_c_bar
  std::vector<std::vector<double>> r_total;  // r_p + allocated common share
};

RealMatrix interference_covariance(const RealChannels& ch, const CovarianceSet& covs, int l, int k);
RealMatrix signal_covariance(const RealChannels& ch, const CovarianceSet& covs, int l, int k);
RealMatrix common_signal_covariance(const RealChannels& ch, const CovarianceSet& covs, int l, int k);

double private_rate(const RealChannels& ch, const CovarianceSet& covs, int l, int k);
double common_rate_bound(const RealChannels& ch, const CovarianceSet& covs, int l, int k);
double cell_common_rate(const RealChannels& ch, const CovarianceSet& covs, int l);

RateReport compute_rates(const RealChannels& ch, const CovarianceSet& covs);

/// r / (P_c + eta * (tr_private + tr_common / K)).
double energy_efficiency(double rate, double p_c, double eta, double tr_private, double tr_common,
                         int users_per_cell);
double energy_efficiency(int l, int k, double rate, const CovarianceSet& covs, const EEParams& ee);

/// min over users of e_lk / alpha_lk.
double mwee_objective(const RateReport& rates, const CovarianceSet& covs, const EEParams& ee);

struct Evaluation {
  RateReport rates;
  std::vector<std::vector<double>> ee;  // [l][k]
  double objective = 0.0;
};

Evaluation evaluate(const RealChannels& ch, const CovarianceSet& covs, const EEParams& ee);

/// Best split of each cell's common rate for fixed private rates: maximizes
/// min_lk (r_p + r_c) / (alpha * cost) subject to sum_k r_c <= cell_rate, r_c >= 0
/// and r_p + r_c >= r_th. Any slack is shared equally. Returns nullopt when the
/// thresholds cannot be met.
std::optional<std::vector<std::vector<double>>> allocate_common_rate(
    const std::vector<std::vector<double>>& r_p, const std::vector<double>& cell_rate,
    const CovarianceSet& covs, const EEParams& ee);

} // namespace starris
