// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include "starris/surrogates.hpp"

#include <cmath>

namespace starris {

namespace {

RealMatrix inverse_psd(const RealMatrix& s) {
  return symmetrize(solve_psd(s, RealMatrix::Identity(s.rows(), s.cols())));
}

double frob(const RealMatrix& a, const RealMatrix& b) { return (a.array() * b.array()).sum(); }

RealVector flatten(const RealMatrix& m) { return Eigen::Map<const RealVector>(m.data(), m.size()); }

} // namespace

CovarianceExpansion CovarianceExpansion::at(RealChannels channels, CovarianceSet covs) {
  CovarianceExpansion e;
  const int L = covs.num_cells(), K = covs.users_per_cell();
  e.d_inv.assign(L, std::vector<RealMatrix>(K));
  e.dc_inv.assign(L, std::vector<RealMatrix>(K));
  e.r_p2.assign(L, std::vector<double>(K));
  e.r_c2.assign(L, std::vector<double>(K));
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      const RealMatrix d = interference_covariance(channels, covs, l, k);
      const RealMatrix dc = d + signal_covariance(channels, covs, l, k);
      e.d_inv[l][k] = inverse_psd(d);
      e.dc_inv[l][k] = inverse_psd(dc);
      e.r_p2[l][k] = 0.5 * logdet2(d);
      e.r_c2[l][k] = 0.5 * logdet2(dc);
    }
  e.channels = std::move(channels);
  e.covs = std::move(covs);
  return e;
}

RealMatrix CovarianceExpansion::private_weight(int l, int k, int i) const {
  const RealMatrix& h = channels.h[l][k][i];
  return kHalfBitsPerNat * h.transpose() * d_inv[l][k] * h;
}

RealMatrix CovarianceExpansion::common_weight(int l, int k, int i) const {
  const RealMatrix& h = channels.h[l][k][i];
  return kHalfBitsPerNat * h.transpose() * dc_inv[l][k] * h;
}

double surrogate_private_rate_P(const CovarianceExpansion& exp, const CovarianceSet& covs, int l, int k) {
  const RealChannels& ch = exp.channels;
  const RealMatrix ds = interference_covariance(ch, covs, l, k) + signal_covariance(ch, covs, l, k);
  double r = 0.5 * logdet2(ds) - exp.r_p2[l][k];
  const RealMatrix w_own = exp.private_weight(l, k, l);
  for (int j = 0; j < covs.users_per_cell(); ++j)
    if (j != k) r -= frob(w_own, covs.p_private[l][j] - exp.covs.p_private[l][j]);
  for (int i = 0; i < covs.num_cells(); ++i)
    if (i != l) r -= frob(exp.private_weight(l, k, i), covs.total(i) - exp.covs.total(i));
  return r;
}

double surrogate_common_rate_P(const CovarianceExpansion& exp, const CovarianceSet& covs, int l, int k) {
  const RealChannels& ch = exp.channels;
  const RealMatrix total = interference_covariance(ch, covs, l, k) + signal_covariance(ch, covs, l, k) +
                           common_signal_covariance(ch, covs, l, k);
  double r = 0.5 * logdet2(total) - exp.r_c2[l][k];
  const RealMatrix w_own = exp.common_weight(l, k, l);
  for (int j = 0; j < covs.users_per_cell(); ++j)
    r -= frob(w_own, covs.p_private[l][j] - exp.covs.p_private[l][j]);
  for (int i = 0; i < covs.num_cells(); ++i)
    if (i != l) r -= frob(exp.common_weight(l, k, i), covs.total(i) - exp.covs.total(i));
  return r;
}

ThetaLayout ThetaLayout::for_config(const RISConfig& ris) {
  ThetaLayout layout;
  for (int m = 0; m < ris.num_ris(); ++m)
    for (int n = 0; n < ris.n_ris(); ++n) {
      if (ris.mode == StarMode::EnergySplitting) {
        layout.slots.push_back({m, n, UserSide::Reflect});
        layout.slots.push_back({m, n, UserSide::Transmit});
      } else {
        const bool reflect = ris.ms_mask[m][n] == ElementMode::ReflectOnly;
        layout.slots.push_back({m, n, reflect ? UserSide::Reflect : UserSide::Transmit});
      }
    }
  return layout;
}

RealVector ThetaLayout::pack(const RISConfig& ris) const {
  RealVector x(num_vars());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const cdouble v = ris.theta(slots[s].m, slots[s].side)(slots[s].n);
    x(2 * s) = v.real();
    x(2 * s + 1) = v.imag();
  }
  return x;
}

RISConfig ThetaLayout::unpack(const RealVector& x, const RISConfig& base) const {
  RISConfig out = base;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    auto& vec = slots[s].side == UserSide::Reflect ? out.theta_r[slots[s].m] : out.theta_t[slots[s].m];
    vec(slots[s].n) = {x(2 * s), x(2 * s + 1)};
  }
  return out;
}

int ThetaLayout::index_of(int m, int n, UserSide side) const {
  for (std::size_t s = 0; s < slots.size(); ++s)
    if (slots[s].m == m && slots[s].n == n && slots[s].side == side) return 2 * static_cast<int>(s);
  return -1;
}

RealMatrix AffineChannels::Entry::at(const RealVector& x) const {
  RealMatrix h = h0;
  for (const auto& [a, b] : terms) h += x(a) * b;
  return h;
}

AffineChannels AffineChannels::build(const SystemModel& model, const ThetaLayout& layout) {
  const int L = model.num_cells(), K = model.users_per_cell();
  const ChannelSet& ch = model.channels;
  const RealMatrix wt = wl_real_decompose(model.tx);
  const RealMatrix wr = wl_real_decompose(model.rx);
  const double scale = model.channel_scale();
  const cdouble j{0.0, 1.0};

  AffineChannels ac;
  ac.h.assign(L, std::vector<std::vector<Entry>>(K, std::vector<Entry>(L)));
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < L; ++i) {
        Entry& e = ac.h[l][k][i];
        e.h0 = scale * wr * real_decompose(ch.direct[l][k][i]) * wt;
        for (std::size_t s = 0; s < layout.slots.size(); ++s) {
          const ThetaSlot& slot = layout.slots[s];
          if (ch.user_side[l][k][slot.m] != slot.side) continue;
          const ComplexMatrix outer = ch.g_user[l][k][slot.m].col(slot.n) * ch.g_bs[slot.m][i].row(slot.n);
          if (outer.cwiseAbs().maxCoeff() == 0.0) continue;
          e.terms.emplace_back(2 * static_cast<int>(s), scale * wr * real_decompose(outer) * wt);
          e.terms.emplace_back(2 * static_cast<int>(s) + 1, scale * wr * real_decompose(j * outer) * wt);
        }
      }
  return ac;
}

namespace {

// Bound of 1/2 log2 |I + V^T D^{-1} V| around (V_bar, D_bar):
//   r_bar + c [ -tr(S_bar D_bar^{-1}) + 2 tr(V_bar^T D_bar^{-1} V) - tr(A (V V^T + D)) ],
// A = D_bar^{-1} - (S_bar + D_bar)^{-1}. V = H_own(x) * sig_root and
// V V^T + D = sum_i H_i(x) Q_i H_i(x)^T + noise.
QuadraticForm log_det_bound(double r_bar, const RealMatrix& s_bar, const RealMatrix& d_bar,
                            const AffineChannels::Entry& own, const RealVector& x_bar,
                            const RealMatrix& sig_root,
                            const std::vector<const AffineChannels::Entry*>& links,
                            const std::vector<RealMatrix>& q, const RealMatrix& noise, int num_vars) {
  const double c = kHalfBitsPerNat;
  const RealMatrix d_inv = inverse_psd(d_bar);
  const RealMatrix a = symmetrize(d_inv - inverse_psd(s_bar + d_bar));
  const RealMatrix a_root = psd_sqrt(a);
  const RealMatrix dv = d_inv * (own.at(x_bar) * sig_root);  // D_bar^{-1} V_bar

  QuadraticForm f;
  f.constant = r_bar + c * (-frob(s_bar, d_inv) + 2.0 * frob(dv, own.h0 * sig_root) - frob(a, noise));
  f.linear = RealVector::Zero(num_vars);
  for (const auto& [idx, b] : own.terms) f.linear(idx) += 2.0 * c * frob(dv, b * sig_root);

  const double rc = std::sqrt(c);
  Eigen::Index rows = 0;
  for (std::size_t i = 0; i < links.size(); ++i) rows += a_root.rows() * q[i].cols();
  f.z0 = RealVector::Zero(rows);
  f.z = RealMatrix::Zero(rows, num_vars);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const RealMatrix q_root = psd_sqrt(q[i]);
    const Eigen::Index n = a_root.rows() * q_root.cols();
    f.z0.segment(row, n) = rc * flatten(a_root * links[i]->h0 * q_root);
    for (const auto& [idx, b] : links[i]->terms) f.z.col(idx).segment(row, n) += rc * flatten(a_root * b * q_root);
    row += n;
  }
  return f;
}

} // namespace

RisExpansion RisExpansion::at(const SystemModel& model, RISConfig ris, CovarianceSet covs) {
  RisExpansion e;
  e.layout = ThetaLayout::for_config(ris);
  e.channels = AffineChannels::build(model, e.layout);
  e.channels_at = model.real_channels(ris);
  const RealVector x_bar = e.layout.pack(ris);
  const int L = covs.num_cells(), K = covs.users_per_cell();
  const int nv = e.layout.num_vars();

  std::vector<RealMatrix> totals;
  for (int i = 0; i < L; ++i) totals.push_back(covs.total(i));

  e.r_p.assign(L, std::vector<double>(K));
  e.r_c_bar.assign(L, std::vector<double>(K));
  e.private_bound.assign(L, std::vector<QuadraticForm>(K));
  e.common_bound.assign(L, std::vector<QuadraticForm>(K));
  for (int l = 0; l < L; ++l) {
    RealMatrix own_private = RealMatrix::Zero(covs.dim(), covs.dim());
    for (int j = 0; j < K; ++j) own_private += covs.p_private[l][j];
    for (int k = 0; k < K; ++k) {
      const RealChannels& ch = e.channels_at;
      const RealMatrix d = interference_covariance(ch, covs, l, k);
      const RealMatrix s = signal_covariance(ch, covs, l, k);
      const RealMatrix sc = common_signal_covariance(ch, covs, l, k);
      e.r_p[l][k] = private_rate(ch, covs, l, k);
      e.r_c_bar[l][k] = common_rate_bound(ch, covs, l, k);

      std::vector<const AffineChannels::Entry*> links;
      std::vector<RealMatrix> q_private, q_common;
      for (int i = 0; i < L; ++i) {
        links.push_back(&e.channels.h[l][k][i]);
        q_private.push_back(i == l ? own_private : totals[i]);
        q_common.push_back(totals[i]);
      }
      const AffineChannels::Entry& own = e.channels.h[l][k][l];
      e.private_bound[l][k] = log_det_bound(e.r_p[l][k], s, d, own, x_bar, psd_sqrt(covs.p_private[l][k]),
                                            links, q_private, ch.noise[l][k], nv);
      e.common_bound[l][k] = log_det_bound(e.r_c_bar[l][k], sc, d + s, own, x_bar, psd_sqrt(covs.p_common[l]),
                                           links, q_common, ch.noise[l][k], nv);
    }
  }
  e.ris = std::move(ris);
  e.covs = std::move(covs);
  return e;
}

double surrogate_private_rate_theta(const RisExpansion& exp, const RISConfig& ris, int l, int k) {
  return exp.private_bound[l][k](exp.layout.pack(ris));
}

double surrogate_common_rate_theta(const RisExpansion& exp, const RISConfig& ris, int l, int k) {
  return exp.common_bound[l][k](exp.layout.pack(ris));
}

} // namespace starris
