// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include "starris/wl_algebra.hpp"

#include <cmath>
#include <numbers>

namespace starris {

WidelyLinearMap WidelyLinearMap::identity(Eigen::Index n) {
  return {ComplexMatrix::Identity(n, n), ComplexMatrix::Zero(n, n)};
}

ComplexVector WidelyLinearMap::apply(const ComplexVector& x) const {
  return gamma1 * x + gamma2 * x.conjugate();
}

WidelyLinearMap compose(const WidelyLinearMap& outer, const WidelyLinearMap& inner) {
  if (outer.cols() != inner.rows())
    throw DimensionMismatch("compose: inner output size does not match outer input size");
  return {outer.gamma1 * inner.gamma1 + outer.gamma2 * inner.gamma2.conjugate(),
          outer.gamma1 * inner.gamma2 + outer.gamma2 * inner.gamma1.conjugate()};
}

RealMatrix real_decompose(const ComplexMatrix& a) {
  const auto m = a.rows();
  const auto n = a.cols();
  RealMatrix r(2 * m, 2 * n);
  r.topLeftCorner(m, n) = a.real();
  r.topRightCorner(m, n) = -a.imag();
  r.bottomLeftCorner(m, n) = a.imag();
  r.bottomRightCorner(m, n) = a.real();
  return r;
}

RealMatrix wl_real_decompose(const WidelyLinearMap& w) {
  if (w.gamma1.rows() != w.gamma2.rows() || w.gamma1.cols() != w.gamma2.cols())
    throw DimensionMismatch("wl_real_decompose: gamma1 and gamma2 differ in shape");
  const auto m = w.rows();
  const auto n = w.cols();
  const ComplexMatrix sum = w.gamma1 + w.gamma2;
  const ComplexMatrix diff = w.gamma1 - w.gamma2;
  RealMatrix r(2 * m, 2 * n);
  r.topLeftCorner(m, n) = sum.real();
  r.topRightCorner(m, n) = -diff.imag();
  r.bottomLeftCorner(m, n) = sum.imag();
  r.bottomRightCorner(m, n) = diff.real();
  return r;
}

RealVector real_stack(const ComplexVector& x) {
  RealVector r(2 * x.size());
  r.head(x.size()) = x.real();
  r.tail(x.size()) = x.imag();
  return r;
}

ComplexVector complex_unstack(const RealVector& x) {
  const auto n = x.size() / 2;
  ComplexVector c(n);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = {x(i), x(n + i)};
  return c;
}

RealMatrix symmetrize(const RealMatrix& s) { return 0.5 * (s + s.transpose()); }

FlooredEigen floored_eigen(const RealMatrix& s) {
  if (s.rows() != s.cols()) throw DimensionMismatch("floored_eigen: matrix is not square");
  if (!s.allFinite()) throw NonPositiveDefinite("floored_eigen: non-finite entries");
  const RealMatrix sym = symmetrize(s);
  const double trace = sym.trace();
  const double floor = 1e-12 * trace / static_cast<double>(sym.rows());
  if (!(floor > 0.0)) throw NonPositiveDefinite("floored_eigen: trace is not positive");
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym);
  FlooredEigen out{es.eigenvalues(), es.eigenvectors()};
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    out.values(i) = std::max(out.values(i), floor);
  return out;
}

double logdet2(const RealMatrix& s) {
  const FlooredEigen fe = floored_eigen(s);
  return fe.values.array().log().sum() / std::numbers::ln2;
}

RealMatrix solve_psd(const RealMatrix& s, const RealMatrix& b) {
  if (s.rows() != b.rows()) throw DimensionMismatch("solve_psd: row count mismatch");
  const FlooredEigen fe = floored_eigen(s);
  const RealMatrix vtb = fe.vectors.transpose() * b;
  return fe.vectors * (fe.values.cwiseInverse().asDiagonal() * vtb);
}

RealMatrix psd_sqrt(const RealMatrix& s) {
  if (s.size() == 0) return s;
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(symmetrize(s));
  const RealVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

bool is_psd(const RealMatrix& s, double tol) {
  if (s.rows() != s.cols() || !s.allFinite()) return false;
  const double scale = std::max(s.cwiseAbs().maxCoeff(), 1e-300);
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  return es.eigenvalues().minCoeff() >= -tol * std::max(lmax, 1e-300);
}

} // namespace starris
