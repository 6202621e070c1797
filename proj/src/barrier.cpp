// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include "starris/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace starris::barrier {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RealVector gather(const RealVector& x, const std::vector<int>& idx) {
  RealVector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = x(idx[i]);
  return out;
}

// tr(E_a G E_b H^T) for sparse basis matrices.
double trace_pair(const std::vector<BasisEntry>& a, const RealMatrix& g, const std::vector<BasisEntry>& b,
                  const RealMatrix& h) {
  double s = 0.0;
  for (const auto& ea : a)
    for (const auto& eb : b) s += ea.value * eb.value * g(ea.col, eb.row) * h(ea.row, eb.col);
  return s;
}

double trace_one(const std::vector<BasisEntry>& a, const RealMatrix& g) {
  double s = 0.0;
  for (const auto& ea : a) s += ea.value * g(ea.col, ea.row);
  return s;
}

// Column a holds vec(E_a), row-major.
RealMatrix vectorized(const MatrixBasis& basis, int dim) {
  RealMatrix v = RealMatrix::Zero(dim * dim, basis.size());
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (const auto& e : basis[a]) v(e.row * dim + e.col, a) += e.value;
  return v;
}

RealMatrix block_matrix(const MatrixBlock& b, const RealVector& x, int local_offset) {
  RealMatrix m = RealMatrix::Zero(b.dim, b.dim);
  const auto& basis = *b.basis;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const double v = x(local_offset + static_cast<int>(a));
    if (v == 0.0) continue;
    for (const auto& e : basis[a]) m(e.row, e.col) += v * e.value;
  }
  return m;
}

// ln det of a symmetric matrix, -inf unless positive definite.
double safe_logdet(const RealMatrix& m, Eigen::LLT<RealMatrix>* out = nullptr) {
  Eigen::LLT<RealMatrix> llt(m);
  if (llt.info() != Eigen::Success) return -kInf;
  const RealVector diag = llt.matrixLLT().diagonal();
  if ((diag.array() <= 0.0).any()) return -kInf;
  const double v = 2.0 * diag.array().log().sum();
  if (out) *out = llt;
  return v;
}

} // namespace

LinearFunction::LinearFunction(std::vector<int> support, RealVector coeffs, double constant)
    : coeffs_(std::move(coeffs)), constant_(constant) {
  support_ = std::move(support);
}

double LinearFunction::value(const RealVector& x) const { return constant_ + coeffs_.dot(x); }

double LinearFunction::derivatives(const RealVector& x, RealVector& grad, RealMatrix& hess) const {
  grad = coeffs_;
  hess = RealMatrix::Zero(x.size(), x.size());
  return value(x);
}

ConcaveQuadratic::ConcaveQuadratic(std::vector<int> support, double constant, RealVector b,
                                   RealVector z0, RealMatrix z)
    : constant_(constant), b_(std::move(b)), z0_(std::move(z0)), z_(std::move(z)) {
  support_ = std::move(support);
  hess_ = -2.0 * z_.transpose() * z_;
}

double ConcaveQuadratic::value(const RealVector& x) const {
  return constant_ + b_.dot(x) - (z0_ + z_ * x).squaredNorm();
}

double ConcaveQuadratic::derivatives(const RealVector& x, RealVector& grad, RealMatrix& hess) const {
  const RealVector r = z0_ + z_ * x;
  grad = b_ - 2.0 * z_.transpose() * r;
  hess = hess_;
  return constant_ + b_.dot(x) - r.squaredNorm();
}

MatrixBasis symmetric_basis(int dim) {
  MatrixBasis basis;
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b) {
      if (a == b)
        basis.push_back({{a, a, 1.0}});
      else
        basis.push_back({{a, b, 1.0}, {b, a, 1.0}});
    }
  return basis;
}

MatrixBasis proper_basis(int dim) {
  const int n = dim / 2;
  MatrixBasis basis;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      if (a == b)
        basis.push_back({{a, a, 1.0}, {a + n, a + n, 1.0}});
      else
        basis.push_back({{a, b, 1.0}, {b, a, 1.0}, {a + n, b + n, 1.0}, {b + n, a + n, 1.0}});
    }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      basis.push_back({{a + n, b, 1.0}, {b + n, a, -1.0}, {a, b + n, -1.0}, {b, a + n, 1.0}});
  return basis;
}

RealVector basis_coordinates(const MatrixBasis& basis, const RealMatrix& m) {
  RealVector c(basis.size());
  for (std::size_t a = 0; a < basis.size(); ++a) {
    double num = 0.0, den = 0.0;
    for (const auto& e : basis[a]) {
      num += e.value * m(e.row, e.col);
      den += e.value * e.value;
    }
    c(a) = num / den;
  }
  return c;
}

RealMatrix basis_matrix(const MatrixBasis& basis, const RealVector& coords, int dim) {
  return block_matrix(MatrixBlock{0, dim, &basis}, coords, 0);
}

LogDetAffine::LogDetAffine(double weight, RealMatrix constant_matrix, std::vector<MatrixBlock> blocks,
                           std::vector<RealMatrix> channels, std::vector<Term> terms,
                           const std::vector<std::pair<int, double>>& linear, double constant)
    : weight_(weight), c_(std::move(constant_matrix)), blocks_(std::move(blocks)),
      channels_(std::move(channels)), terms_(std::move(terms)), constant_(constant) {
  std::map<int, int> local;
  for (const auto& b : blocks_)
    for (std::size_t a = 0; a < b.basis->size(); ++a) local.emplace(b.offset + static_cast<int>(a), 0);
  for (const auto& [idx, coeff] : linear) local.emplace(idx, 0);
  for (auto& [idx, pos] : local) {
    pos = static_cast<int>(support_.size());
    support_.push_back(idx);
  }
  for (const auto& b : blocks_) block_local_.push_back(local.at(b.offset));
  linear_ = RealVector::Zero(support_.size());
  for (const auto& [idx, coeff] : linear) linear_(local.at(idx)) += coeff;
}

RealMatrix LogDetAffine::assemble(const RealVector& x) const {
  RealMatrix m = c_;
  for (const auto& t : terms_) {
    const RealMatrix& h = channels_[t.channel];
    m.noalias() += h * block_matrix(blocks_[t.block], x, block_local_[t.block]) * h.transpose();
  }
  return 0.5 * (m + m.transpose());
}

double LogDetAffine::value(const RealVector& x) const {
  const double ld = safe_logdet(assemble(x));
  if (!std::isfinite(ld)) return -kInf;
  return weight_ * ld + linear_.dot(x) + constant_;
}

double LogDetAffine::derivatives(const RealVector& x, RealVector& grad, RealMatrix& hess) const {
  Eigen::LLT<RealMatrix> llt;
  const double ld = safe_logdet(assemble(x), &llt);
  const auto n = static_cast<Eigen::Index>(support_.size());
  grad = linear_;
  hess = RealMatrix::Zero(n, n);
  if (!std::isfinite(ld)) return -kInf;

  const std::size_t nc = channels_.size();
  std::vector<RealMatrix> y(nc);
  for (std::size_t c = 0; c < nc; ++c) y[c] = llt.solve(channels_[c]);
  std::vector<std::vector<RealMatrix>> g(nc, std::vector<RealMatrix>(nc));
  for (std::size_t c1 = 0; c1 < nc; ++c1)
    for (std::size_t c2 = 0; c2 < nc; ++c2) g[c1][c2] = channels_[c1].transpose() * y[c2];

  for (const auto& t : terms_) {
    const auto& basis = *blocks_[t.block].basis;
    const int off = block_local_[t.block];
    const RealMatrix& gt = g[t.channel][t.channel];
    for (std::size_t a = 0; a < basis.size(); ++a) grad(off + a) += weight_ * trace_one(basis[a], gt);
  }
  // tr(E_a G E_b G^T) = vec(E_a)^T K vec(E_b) with K[(i,j),(k,l)] = G(j,k) G(i,l); one
  // product per (channel pair, basis pair).
  std::map<std::tuple<int, int, const MatrixBasis*, const MatrixBasis*>, RealMatrix> cache;
  auto curvature = [&](int c1, int c2, const MatrixBlock& ba, const MatrixBlock& bb) -> const RealMatrix& {
    auto [it, fresh] = cache.try_emplace({c1, c2, ba.basis, bb.basis});
    if (fresh) {
      const RealMatrix& gm = g[c1][c2];
      const int da = ba.dim, db = bb.dim;
      RealMatrix k(da * da, db * db);
      for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j)
          for (int kk = 0; kk < db; ++kk)
            for (int l = 0; l < db; ++l) k(i * da + j, kk * db + l) = gm(j, kk) * gm(i, l);
      it->second = -weight_ * vectorized(*ba.basis, da).transpose() * k * vectorized(*bb.basis, db);
    }
    return it->second;
  };
  for (std::size_t ti = 0; ti < terms_.size(); ++ti) {
    const auto& t = terms_[ti];
    const int oa = block_local_[t.block];
    for (std::size_t ui = ti; ui < terms_.size(); ++ui) {
      const auto& u = terms_[ui];
      const int ob = block_local_[u.block];
      const RealMatrix& h = curvature(t.channel, u.channel, blocks_[t.block], blocks_[u.block]);
      hess.block(oa, ob, h.rows(), h.cols()) += h;
      if (ui != ti) hess.block(ob, oa, h.cols(), h.rows()) += h.transpose();
    }
  }
  return weight_ * ld + linear_.dot(x) + constant_;
}

ShiftedFunction::ShiftedFunction(const ConcaveFunction& inner, int shift_index) : inner_(inner) {
  support_ = inner.support();
  support_.push_back(shift_index);
}

double ShiftedFunction::value(const RealVector& x) const {
  return inner_.value(x.head(x.size() - 1)) - x(x.size() - 1);
}

double ShiftedFunction::derivatives(const RealVector& x, RealVector& grad, RealMatrix& hess) const {
  const auto m = x.size() - 1;
  RealVector gi;
  RealMatrix hi;
  const double v = inner_.derivatives(x.head(m), gi, hi);
  grad.resize(m + 1);
  grad.head(m) = gi;
  grad(m) = -1.0;
  hess = RealMatrix::Zero(m + 1, m + 1);
  hess.topLeftCorner(m, m) = hi;
  return v - x(m);
}

double min_constraint_value(const Problem& p, const RealVector& x) {
  double v = kInf;
  for (const auto& c : p.constraints) v = std::min(v, c->value(gather(x, c->support())));
  return v;
}

bool strictly_feasible(const Problem& p, const RealVector& x) {
  if (!x.allFinite()) return false;
  for (const auto& c : p.constraints)
    if (!(c->value(gather(x, c->support())) > 0.0)) return false;
  for (const auto& b : p.psd_blocks)
    if (!std::isfinite(safe_logdet(block_matrix(b, x, b.offset)))) return false;
  return true;
}

namespace {

// -c^T x + mu * barrier(x); +inf outside the interior.
double merit(const Problem& p, const RealVector& x, double mu) {
  double f = -p.objective.dot(x);
  for (const auto& c : p.constraints) {
    const double g = c->value(gather(x, c->support()));
    if (!(g > 0.0)) return kInf;
    f -= mu * std::log(g);
  }
  for (const auto& b : p.psd_blocks) {
    const double ld = safe_logdet(block_matrix(b, x, b.offset));
    if (!std::isfinite(ld)) return kInf;
    f -= mu * ld;
  }
  return f;
}

void assemble_newton(const Problem& p, const RealVector& x, double mu, RealVector& grad, RealMatrix& hess) {
  const int n = p.num_vars;
  grad = -p.objective;
  hess = RealMatrix::Zero(n, n);
  RealVector gl;
  RealMatrix hl;
  for (const auto& c : p.constraints) {
    const auto& idx = c->support();
    const double inv = 1.0 / c->derivatives(gather(x, idx), gl, hl);
    grad(idx) -= (mu * inv) * gl;
    hess(idx, idx) += (mu * inv * inv) * gl * gl.transpose() - (mu * inv) * hl;
  }
  for (const auto& b : p.psd_blocks) {
    const RealMatrix minv = block_matrix(b, x, b.offset).llt().solve(RealMatrix::Identity(b.dim, b.dim));
    const auto& basis = *b.basis;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      grad(b.offset + a) -= mu * trace_one(basis[a], minv);
      for (std::size_t c = a; c < basis.size(); ++c) {
        const double v = mu * trace_pair(basis[a], minv, basis[c], minv);
        hess(b.offset + a, b.offset + c) += v;
        if (c != a) hess(b.offset + c, b.offset + a) += v;
      }
    }
  }
}

RealVector newton_direction(const RealMatrix& hess, const RealVector& grad) {
  // Symmetric Jacobi scaling: barrier Hessians mix entries many orders of magnitude apart
  // when a cost weight is large, which defeats a plain Cholesky factorization.
  const RealVector d = hess.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const RealMatrix hs = d.asDiagonal() * hess * d.asDiagonal();
  const RealVector gs = d.cwiseProduct(grad);
  Eigen::LLT<RealMatrix> llt(hs);
  if (llt.info() == Eigen::Success) return -d.cwiseProduct(llt.solve(gs));
  for (double ridge = 1e-12; ridge < 1e6; ridge *= 100.0) {
    RealMatrix h = hs;
    h.diagonal().array() += ridge;
    llt.compute(h);
    if (llt.info() == Eigen::Success) return -d.cwiseProduct(llt.solve(gs));
  }
  return -grad;
}

} // namespace

Result maximize(const Problem& p, RealVector x0, const Settings& s,
                const std::function<bool(const RealVector&)>& stop_early) {
  Result res;
  res.x = std::move(x0);
  if (!strictly_feasible(p, res.x)) return res;

  RealVector grad;
  RealMatrix hess;
  for (double mu = s.mu0; mu >= s.mu_min * (1.0 - 1e-12); mu /= s.mu_factor) {
    double f = merit(p, res.x, mu);
    for (int it = 0; it < s.max_newton; ++it) {
      assemble_newton(p, res.x, mu, grad, hess);
      if (grad.lpNorm<Eigen::Infinity>() <= s.grad_tol) break;
      const RealVector d = newton_direction(hess, grad);
      const double slope = grad.dot(d);
      if (!(slope < 0.0) || -slope <= 2e-9 * mu) break;

      double step = 1.0;
      double f_new = merit(p, res.x + step * d, mu);
      while (!(f_new <= f + 0.25 * step * slope) && step > 1e-14) {
        step *= 0.5;
        f_new = merit(p, res.x + step * d, mu);
      }
      if (step <= 1e-14) break;
      res.x += step * d;
      f = f_new;
      ++res.newton_iterations;
      if (stop_early && stop_early(res.x)) {
        res.converged = true;
        return res;
      }
    }
  }
  res.converged = true;
  return res;
}

std::optional<RealVector> find_interior(const Problem& p, const RealVector& x0, const Settings& s) {
  if (strictly_feasible(p, x0)) return x0;
  const double g0 = min_constraint_value(p, x0);
  if (!std::isfinite(g0)) return std::nullopt;

  const int n = p.num_vars;
  Problem aux;
  aux.num_vars = n + 1;
  aux.objective = RealVector::Zero(n + 1);
  aux.objective(n) = 1.0;
  for (const auto& c : p.constraints) aux.constraints.push_back(std::make_unique<ShiftedFunction>(*c, n));
  aux.constraints.push_back(std::make_unique<LinearFunction>(std::vector<int>{n}, -RealVector::Ones(1), 1.0));
  aux.psd_blocks = p.psd_blocks;

  RealVector start(n + 1);
  start.head(n) = x0;
  start(n) = std::min(g0, 0.0) - 1.0;

  Settings aux_settings = s;
  aux_settings.mu0 = 1.0;
  auto done = [&](const RealVector& x) { return x(n) > 0.0 && strictly_feasible(p, x.head(n)); };
  const Result r = maximize(aux, start, aux_settings, done);
  if (done(r.x)) return RealVector(r.x.head(n));
  return std::nullopt;
}

} // namespace starris::barrier
