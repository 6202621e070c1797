// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include "starris/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace starris {

CovarianceSet CovarianceSet::zeros(int num_cells, int users_per_cell, int n_bs) {
  const int d = 2 * n_bs;
  CovarianceSet c;
  c.p_private.assign(num_cells, std::vector<RealMatrix>(users_per_cell, RealMatrix::Zero(d, d)));
  c.p_common.assign(num_cells, RealMatrix::Zero(d, d));
  c.r_common_alloc.assign(num_cells, std::vector<double>(users_per_cell, 0.0));
  return c;
}

RealMatrix CovarianceSet::total(int i) const {
  RealMatrix p = p_common[i];
  for (const auto& pk : p_private[i]) p += pk;
  return p;
}

bool CovarianceSet::is_feasible(double p_max, double tol) const {
  for (int l = 0; l < num_cells(); ++l) {
    if (!is_psd(p_common[l])) return false;
    for (const auto& p : p_private[l])
      if (!is_psd(p)) return false;
    if (bs_power(l) > p_max + tol) return false;
    for (double r : r_common_alloc[l])
      if (!(r >= 0.0)) return false;
  }
  return true;
}

EEParams EEParams::defaults(int num_cells, int users_per_cell) {
  EEParams e;
  e.alpha.assign(num_cells, std::vector<double>(users_per_cell, 1.0));
  e.r_th.assign(num_cells, std::vector<double>(users_per_cell, 0.0));
  return e;
}

void EEParams::validate() const {
  if (!(p_c > 0.0) || !(eta > 0.0) || !(p_max > 0.0))
    throw InvalidConfig("EE parameters p_c, eta and p_max must be positive");
  for (const auto& row : alpha)
    for (double a : row)
      if (!(a > 0.0)) throw InvalidConfig("user weights must be positive");
  for (const auto& row : r_th)
    for (double r : row)
      if (!(r >= 0.0)) throw InvalidConfig("rate thresholds must be nonnegative");
}

double EEParams::consumed_power(const CovarianceSet& covs, int l, int k) const {
  const double tr = covs.p_private[l][k].trace() + covs.p_common[l].trace() / covs.users_per_cell();
  return p_c + eta * tr;
}

SystemModel SystemModel::build(ChannelSet channels, const IQIParams& iqi) {
  SystemModel s;
  s.tx = iqi_gammas(iqi.tx_amplitude, iqi.tx_phase);
  s.rx = iqi_gammas(iqi.rx_amplitude, iqi.rx_phase);
  if (s.tx.rows() != channels.n_bs() || s.rx.rows() != channels.n_u())
    throw DimensionMismatch("SystemModel: IQI chain count does not match antenna count");
  if (!(iqi.noise_power > 0.0)) throw InvalidConfig("noise power must be positive");
  s.noise_power = iqi.noise_power;
  s.channels = std::move(channels);
  return s;
}

double SystemModel::channel_scale() const { return 1.0 / std::sqrt(noise_power); }

RealChannels SystemModel::real_channels(const RISConfig& ris) const {
  const int L = num_cells(), K = users_per_cell();
  const double scale = channel_scale();
  const RealMatrix cn = noise_covariance(rx, 1.0);
  RealChannels rc;
  rc.h.assign(L, std::vector<std::vector<RealMatrix>>(K));
  rc.noise.assign(L, std::vector<RealMatrix>(K, cn));
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < L; ++i)
        rc.h[l][k].push_back(scale * end_to_end_real_channel(effective_channel(channels, ris, l, k, i), tx, rx));
  return rc;
}

namespace {

RealMatrix congruence(const RealMatrix& h, const RealMatrix& p) { return h * p * h.transpose(); }

double half_logdet_gap(const RealMatrix& big, const RealMatrix& small) {
  return std::max(0.0, 0.5 * (logdet2(big) - logdet2(small)));
}

} // namespace

RealMatrix interference_covariance(const RealChannels& ch, const CovarianceSet& covs, int l, int k) {
  const int L = covs.num_cells(), K = covs.users_per_cell();
  RealMatrix d = ch.noise[l][k];
  for (int i = 0; i < L; ++i)
    if (i != l) d += congruence(ch.h[l][k][i], covs.total(i));
  RealMatrix intra = RealMatrix::Zero(covs.dim(), covs.dim());
  for (int j = 0; j < K; ++j)
    if (j != k) intra += covs.p_private[l][j];
  d += congruence(ch.h[l][k][l], intra);
  return symmetrize(d);
}

RealMatrix signal_covariance(const RealChannels& ch, const CovarianceSet& covs, int l, int k) {
  return symmetrize(congruence(ch.h[l][k][l], covs.p_private[l][k]));
}

RealMatrix common_signal_covariance(const RealChannels& ch, const CovarianceSet& covs, int l, int k) {
  return symmetrize(congruence(ch.h[l][k][l], covs.p_common[l]));
}

double private_rate(const RealChannels& ch, const CovarianceSet& covs, int l, int k) {
  const RealMatrix d = interference_covariance(ch, covs, l, k);
  return half_logdet_gap(d + signal_covariance(ch, covs, l, k), d);
}

double common_rate_bound(const RealChannels& ch, const CovarianceSet& covs, int l, int k) {
  const RealMatrix dc = interference_covariance(ch, covs, l, k) + signal_covariance(ch, covs, l, k);
  return half_logdet_gap(dc + common_signal_covariance(ch, covs, l, k), dc);
}

double cell_common_rate(const RealChannels& ch, const CovarianceSet& covs, int l) {
  double r = std::numeric_limits<double>::infinity();
  for (int k = 0; k < covs.users_per_cell(); ++k) r = std::min(r, common_rate_bound(ch, covs, l, k));
  return r;
}

RateReport compute_rates(const RealChannels& ch, const CovarianceSet& covs) {
  const int L = covs.num_cells(), K = covs.users_per_cell();
  RateReport rep;
  rep.r_p.assign(L, std::vector<double>(K));
  rep.r_c_bar.assign(L, std::vector<double>(K));
  rep.r_total.assign(L, std::vector<double>(K));
  rep.r_c_cell.assign(L, std::numeric_limits<double>::infinity());
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const RealMatrix d = interference_covariance(ch, covs, l, k);
      const RealMatrix ds = d + signal_covariance(ch, covs, l, k);
      rep.r_p[l][k] = half_logdet_gap(ds, d);
      rep.r_c_bar[l][k] = half_logdet_gap(ds + common_signal_covariance(ch, covs, l, k), ds);
      rep.r_c_cell[l] = std::min(rep.r_c_cell[l], rep.r_c_bar[l][k]);
      rep.r_total[l][k] = rep.r_p[l][k] + covs.r_common_alloc[l][k];
    }
  }
  return rep;
}

double energy_efficiency(double rate, double p_c, double eta, double tr_private, double tr_common,
                         int users_per_cell) {
  return rate / (p_c + eta * (tr_private + tr_common / users_per_cell));
}

double energy_efficiency(int l, int k, double rate, const CovarianceSet& covs, const EEParams& ee) {
  return rate / ee.consumed_power(covs, l, k);
}

double mwee_objective(const RateReport& rates, const CovarianceSet& covs, const EEParams& ee) {
  double e = std::numeric_limits<double>::infinity();
  for (int l = 0; l < covs.num_cells(); ++l)
    for (int k = 0; k < covs.users_per_cell(); ++k)
      e = std::min(e, energy_efficiency(l, k, rates.r_total[l][k], covs, ee) / ee.alpha[l][k]);
  return e;
}

Evaluation evaluate(const RealChannels& ch, const CovarianceSet& covs, const EEParams& ee) {
  Evaluation ev;
  ev.rates = compute_rates(ch, covs);
  const int L = covs.num_cells(), K = covs.users_per_cell();
  ev.ee.assign(L, std::vector<double>(K));
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) ev.ee[l][k] = energy_efficiency(l, k, ev.rates.r_total[l][k], covs, ee);
  ev.objective = mwee_objective(ev.rates, covs, ee);
  return ev;
}

std::optional<std::vector<std::vector<double>>> allocate_common_rate(
    const std::vector<std::vector<double>>& r_p, const std::vector<double>& cell_rate,
    const CovarianceSet& covs, const EEParams& ee) {
  const int L = covs.num_cells(), K = covs.users_per_cell();
  std::vector<std::vector<double>> scale(L, std::vector<double>(K));
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) scale[l][k] = ee.alpha[l][k] * ee.consumed_power(covs, l, k);

  auto demand = [&](double e, int l, int k) {
    return std::max({0.0, e * scale[l][k] - r_p[l][k], ee.r_th[l][k] - r_p[l][k]});
  };
  auto feasible = [&](double e) {
    for (int l = 0; l < L; ++l) {
      double need = 0.0;
      for (int k = 0; k < K; ++k) need += demand(e, l, k);
      if (need > std::max(cell_rate[l], 0.0)) return false;
    }
    return true;
  };

  if (!feasible(0.0)) return std::nullopt;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k)
      hi = std::min(hi, (r_p[l][k] + std::max(cell_rate[l], 0.0)) / scale[l][k]);
  if (feasible(hi)) {
    lo = hi;
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
  }

  std::vector<std::vector<double>> alloc(L, std::vector<double>(K));
  for (int l = 0; l < L; ++l) {
    double used = 0.0;
    for (int k = 0; k < K; ++k) used += alloc[l][k] = demand(lo, l, k);
    const double slack = std::max(cell_rate[l], 0.0) - used;
    if (slack > 0.0)
      for (int k = 0; k < K; ++k) alloc[l][k] += slack / K;
  }
  return alloc;
}

} // namespace starris
