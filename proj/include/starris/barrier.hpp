// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "starris/wl_algebra.hpp"

// Log-barrier interior-point method for
//   maximize c^T x  s.t.  g_i(x) >= 0 (g_i concave),  M_j(x) > 0 (M_j affine, symmetric).
namespace starris::barrier {

/// Concave function of a subset of the variables. Local vectors follow `support()` order.
class ConcaveFunction {
public:
  virtual ~ConcaveFunction() = default;

  const std::vector<int>& support() const { return support_; }

  /// -infinity outside the function's domain.
  virtual double value(const RealVector& x_local) const = 0;
  virtual double derivatives(const RealVector& x_local, RealVector& grad, RealMatrix& hess) const = 0;

protected:
  std::vector<int> support_;
};

class LinearFunction final : public ConcaveFunction {
public:
  LinearFunction(std::vector<int> support, RealVector coeffs, double constant);
  double value(const RealVector& x) const override;
  double derivatives(const RealVector& x, RealVector& grad, RealMatrix& hess) const override;

private:
  RealVector coeffs_;
  double constant_;
};

/// constant + b^T x - ||z0 + Z x||^2.
class ConcaveQuadratic final : public ConcaveFunction {
public:
  ConcaveQuadratic(std::vector<int> support, double constant, RealVector b, RealVector z0, RealMatrix z);
  double value(const RealVector& x) const override;
  double derivatives(const RealVector& x, RealVector& grad, RealMatrix& hess) const override;

private:
  double constant_;
  RealVector b_;
  RealVector z0_;
  RealMatrix z_;
  RealMatrix hess_;
};

/// Nonzero entry of a basis matrix of a structured symmetric block.
struct BasisEntry {
  int row;
  int col;
  double value;
};
using MatrixBasis = std::vector<std::vector<BasisEntry>>;

/// Symmetric dim x dim matrices, one coordinate per (a <= b) pair.
MatrixBasis symmetric_basis(int dim);
/// Real forms [[A, -B], [B, A]] of complex Hermitian n x n matrices (dim = 2n).
MatrixBasis proper_basis(int dim);
/// Coordinates of `m` in `basis` (least-squares on the entries).
RealVector basis_coordinates(const MatrixBasis& basis, const RealMatrix& m);
RealMatrix basis_matrix(const MatrixBasis& basis, const RealVector& coords, int dim);

/// Matrix-valued affine block M(x) = sum_a x[offset + a] E_a.
struct MatrixBlock {
  int offset;
  int dim;
  const MatrixBasis* basis;
};

/// weight * ln det(C + sum_t H_t M_{b(t)}(x) H_t^T) + lin^T x + constant, weight >= 0.
class LogDetAffine final : public ConcaveFunction {
public:
  struct Term {
    int block;    // index into blocks
    int channel;  // index into channels
  };

  LogDetAffine(double weight, RealMatrix constant_matrix, std::vector<MatrixBlock> blocks,
               std::vector<RealMatrix> channels, std::vector<Term> terms,
               const std::vector<std::pair<int, double>>& linear, double constant);

  double value(const RealVector& x) const override;
  double derivatives(const RealVector& x, RealVector& grad, RealMatrix& hess) const override;

private:
  RealMatrix assemble(const RealVector& x) const;

  double weight_;
  RealMatrix c_;
  std::vector<MatrixBlock> blocks_;
  std::vector<int> block_local_;  // local offset of each block
  std::vector<RealMatrix> channels_;
  std::vector<Term> terms_;
  RealVector linear_;
  double constant_;
};

/// g(x) - s, used by the phase-I search.
class ShiftedFunction final : public ConcaveFunction {
public:
  ShiftedFunction(const ConcaveFunction& inner, int shift_index);
  double value(const RealVector& x) const override;
  double derivatives(const RealVector& x, RealVector& grad, RealMatrix& hess) const override;

private:
  const ConcaveFunction& inner_;
};

struct Problem {
  int num_vars = 0;
  RealVector objective;  // maximized
  std::vector<std::unique_ptr<ConcaveFunction>> constraints;
  std::vector<MatrixBlock> psd_blocks;
};

struct Settings {
  double mu0 = 0.1;
  double mu_factor = 10.0;
  double mu_min = 1e-6;     // stages stop once mu drops below this
  double grad_tol = 1e-6;   // inner stopping rule on the gradient norm
  int max_newton = 80;      // per stage
};

struct Result {
  RealVector x;
  int newton_iterations = 0;
  bool converged = false;
};

bool strictly_feasible(const Problem& p, const RealVector& x);
double min_constraint_value(const Problem& p, const RealVector& x);

/// Requires a strictly feasible start. `stop_early` is checked after every Newton step.
Result maximize(const Problem& p, RealVector x0, const Settings& s,
                const std::function<bool(const RealVector&)>& stop_early = {});

/// Phase I: searches a strictly feasible point starting from x0, whose PSD blocks must
/// already be positive definite. Returns nullopt when none is found.
std::optional<RealVector> find_interior(const Problem& p, const RealVector& x0, const Settings& s);

} // namespace starris::barrier
