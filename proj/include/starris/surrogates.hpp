// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#pragma once

#include <vector>

#include "starris/rate_model.hpp"

namespace starris {

/// 1 / (2 ln 2): converts half natural log-dets into bits.
inline constexpr double kHalfBitsPerNat = 0.72134752044448170368;

/// Expansion point of the covariance-step bounds: everything the linearized
/// interference terms need, evaluated once at the previous covariances.
struct CovarianceExpansion {
  RealChannels channels;  // at the fixed RIS configuration
  CovarianceSet covs;
  std::vector<std::vector<RealMatrix>> d_inv;   // D_lk^{-1}
  std::vector<std::vector<RealMatrix>> dc_inv;  // D_{c,lk}^{-1}
  std::vector<std::vector<double>> r_p2;        // 1/2 log2 |D_lk|
  std::vector<std::vector<double>> r_c2;        // 1/2 log2 |D_{c,lk}|

  static CovarianceExpansion at(RealChannels channels, CovarianceSet covs);

  /// Gradient weights H_{lk,i}^T D^{-1} H_{lk,i} / (2 ln 2) of the linearized terms.
  RealMatrix private_weight(int l, int k, int i) const;
  RealMatrix common_weight(int l, int k, int i) const;
};

/// Concave minorant of the private rate in the covariances; tight at the expansion.
double surrogate_private_rate_P(const CovarianceExpansion& exp, const CovarianceSet& covs, int l, int k);
/// Same for the common-rate bound r_c_bar.
double surrogate_common_rate_P(const CovarianceExpansion& exp, const CovarianceSet& covs, int l, int k);

/// One complex RIS coefficient exposed to the optimizer as two reals (re, im).
struct ThetaSlot {
  int m;
  int n;
  UserSide side;
};

/// Stacks the optimizable coefficients of a RISConfig. Under MS the masked
/// coefficient of every element is omitted (held at zero).
struct ThetaLayout {
  std::vector<ThetaSlot> slots;

  static ThetaLayout for_config(const RISConfig& ris);

  int num_vars() const { return 2 * static_cast<int>(slots.size()); }
  RealVector pack(const RISConfig& ris) const;
  /// Writes x into a copy of `base`.
  RISConfig unpack(const RealVector& x, const RISConfig& base) const;
  /// Variable index of the real part of (m, n, side), or -1.
  int index_of(int m, int n, UserSide side) const;
};

/// Real-domain channels as affine functions of the stacked coefficients:
/// H_{lk,i}(x) = h0 + sum_a x_a * terms[a].
struct AffineChannels {
  struct Entry {
    RealMatrix h0;
    std::vector<std::pair<int, RealMatrix>> terms;

    RealMatrix at(const RealVector& x) const;
  };
  std::vector<std::vector<std::vector<Entry>>> h;  // [l][k][i]

  static AffineChannels build(const SystemModel& model, const ThetaLayout& layout);
};

/// constant + linear^T x - ||z0 + Z x||^2.
struct QuadraticForm {
  double constant = 0.0;
  RealVector linear;
  RealVector z0;
  RealMatrix z;

  double operator()(const RealVector& x) const { return constant + linear.dot(x) - (z0 + z * x).squaredNorm(); }
};

/// Expansion point of the RIS-step bounds at Theta^(t-1) for fixed covariances.
struct RisExpansion {
  ThetaLayout layout;
  AffineChannels channels;
  RISConfig ris;
  CovarianceSet covs;
  RealChannels channels_at;                          // at ris
  std::vector<std::vector<double>> r_p;              // exact rates at the expansion
  std::vector<std::vector<double>> r_c_bar;
  std::vector<std::vector<QuadraticForm>> private_bound;  // hat r_p(x)
  std::vector<std::vector<QuadraticForm>> common_bound;   // hat r_c(x)

  static RisExpansion at(const SystemModel& model, RISConfig ris, CovarianceSet covs);
};

double surrogate_private_rate_theta(const RisExpansion& exp, const RISConfig& ris, int l, int k);
double surrogate_common_rate_theta(const RisExpansion& exp, const RISConfig& ris, int l, int k);

} // namespace starris
