// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#pragma once

#include <complex>

#include <Eigen/Dense>

#include "starris/errors.hpp"

namespace starris {

using cdouble = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// y = gamma1 * x + gamma2 * conj(x).
struct WidelyLinearMap {
  ComplexMatrix gamma1;
  ComplexMatrix gamma2;

  static WidelyLinearMap identity(Eigen::Index n);

  Eigen::Index rows() const { return gamma1.rows(); }
  Eigen::Index cols() const { return gamma1.cols(); }

  ComplexVector apply(const ComplexVector& x) const;
};

/// `outer` applied after `inner`.
WidelyLinearMap compose(const WidelyLinearMap& outer, const WidelyLinearMap& inner);

// All real-domain quantities use the block layout [[Re, -Im], [Im, Re]] acting on
// stacked vectors [Re x; Im x].

RealMatrix real_decompose(const ComplexMatrix& a);

RealMatrix wl_real_decompose(const WidelyLinearMap& w);

RealVector real_stack(const ComplexVector& x);
ComplexVector complex_unstack(const RealVector& x);

/// Eigen-floor policy shared by logdet2 and solve_psd: symmetrize, then lift every
/// eigenvalue below 1e-12 * trace / dim to that floor.
struct FlooredEigen {
  RealVector values;
  RealMatrix vectors;
};
FlooredEigen floored_eigen(const RealMatrix& s);

/// log2 det(S) after the eigen-floor policy. Throws NonPositiveDefinite when the
/// trace is not positive (no floor exists).
double logdet2(const RealMatrix& s);

/// X with S X = B.
RealMatrix solve_psd(const RealMatrix& s, const RealMatrix& b);

/// Symmetric square root with negative eigenvalues clamped to zero.
RealMatrix psd_sqrt(const RealMatrix& s);

RealMatrix symmetrize(const RealMatrix& s);

/// Symmetric to 1e-10 relative and min eigenvalue >= -tol * max eigenvalue.
bool is_psd(const RealMatrix& s, double tol = 1e-10);

} // namespace starris
