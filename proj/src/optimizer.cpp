// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#include "starris/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>

namespace starris {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using barrier::BasisEntry;
using barrier::ConcaveFunction;
using barrier::ConcaveQuadratic;
using barrier::LinearFunction;
using barrier::LogDetAffine;
using barrier::MatrixBasis;
using barrier::MatrixBlock;

double inner(const std::vector<BasisEntry>& e, const RealMatrix& w) {
  double s = 0.0;
  for (const auto& x : e) s += x.value * w(x.row, x.col);
  return s;
}

double trace_of(const std::vector<BasisEntry>& e) {
  double s = 0.0;
  for (const auto& x : e)
    if (x.row == x.col) s += x.value;
  return s;
}

double frob(const RealMatrix& a, const RealMatrix& b) { return (a.array() * b.array()).sum(); }

// min over users of (r_p + share) / (alpha * cost) after the best split of each cell's
// common rate; -inf when the thresholds cannot be met.
double fairness_value(const std::vector<std::vector<double>>& r_p, const std::vector<double>& cell_rate,
                      const CovarianceSet& covs, const EEParams& ee) {
  const auto alloc = allocate_common_rate(r_p, cell_rate, covs, ee);
  if (!alloc) return -kInf;
  double v = kInf;
  for (int l = 0; l < covs.num_cells(); ++l)
    for (int k = 0; k < covs.users_per_cell(); ++k)
      v = std::min(v, (r_p[l][k] + (*alloc)[l][k]) / (ee.alpha[l][k] * ee.consumed_power(covs, l, k)));
  return v;
}

// Variable layout of the covariance step: one structured block per covariance, then the
// common-rate shares, then the epigraph variable.
struct CovLayout {
  MatrixBasis basis;
  int dim = 0;
  int L = 0;
  int K = 0;
  bool rs = false;
  std::vector<MatrixBlock> blocks;
  std::vector<std::vector<int>> rc;  // [l][k], -1 if the share is fixed at zero
  int t = 0;
  int num_vars = 0;

  int per_cell() const { return rs ? K + 1 : K; }
  int private_block(int l, int k) const { return l * per_cell() + k; }
  int common_block(int l) const { return rs ? l * per_cell() + K : -1; }

  CovLayout(const Instance& inst, const std::vector<bool>& keep_common) {
    L = inst.model.num_cells();
    K = inst.model.users_per_cell();
    dim = 2 * inst.model.n_bs();
    rs = inst.scheme.rate_splitting;
    basis = inst.scheme.structure == CovarianceStructure::Proper ? barrier::proper_basis(dim)
                                                                 : barrier::symmetric_basis(dim);
    const int nb = static_cast<int>(basis.size());
    int off = 0;
    for (int b = 0; b < L * per_cell(); ++b, off += nb) blocks.push_back({off, dim, &basis});
    rc.assign(L, std::vector<int>(K, -1));
    for (int l = 0; l < L; ++l)
      if (rs && keep_common[l])
        for (int k = 0; k < K; ++k) rc[l][k] = off++;
    t = off++;
    num_vars = off;
  }

  RealVector pack(const CovarianceSet& c, double t_value) const {
    RealVector x = RealVector::Zero(num_vars);
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < K; ++k)
        x.segment(blocks[private_block(l, k)].offset, basis.size()) =
            barrier::basis_coordinates(basis, c.p_private[l][k]);
      if (rs)
        x.segment(blocks[common_block(l)].offset, basis.size()) =
            barrier::basis_coordinates(basis, c.p_common[l]);
      for (int k = 0; k < K; ++k)
        if (rc[l][k] >= 0) x(rc[l][k]) = c.r_common_alloc[l][k];
    }
    x(t) = t_value;
    return x;
  }

  CovarianceSet unpack(const RealVector& x) const {
    CovarianceSet c = CovarianceSet::zeros(L, K, dim / 2);
    auto block = [&](int b) {
      return symmetrize(barrier::basis_matrix(basis, x.segment(blocks[b].offset, basis.size()), dim));
    };
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < K; ++k) c.p_private[l][k] = block(private_block(l, k));
      if (rs) c.p_common[l] = block(common_block(l));
      for (int k = 0; k < K; ++k) c.r_common_alloc[l][k] = rc[l][k] >= 0 ? x(rc[l][k]) : 0.0;
    }
    return c;
  }

  std::vector<int> cell_blocks(int l) const {
    std::vector<int> b;
    for (int k = 0; k < K; ++k) b.push_back(private_block(l, k));
    if (rs) b.push_back(common_block(l));
    return b;
  }
};

// Linear terms -<W, P_b - P_bar_b> of the linearized interference, accumulated into
// (index, coefficient) pairs and a constant.
void add_linearization(const CovLayout& lay, int block, const RealMatrix& w, const RealMatrix& p_bar,
                       std::vector<std::pair<int, double>>& lin, double& constant) {
  const auto& b = lay.blocks[block];
  for (std::size_t a = 0; a < lay.basis.size(); ++a)
    lin.emplace_back(b.offset + static_cast<int>(a), -inner(lay.basis[a], w));
  constant += frob(w, p_bar);
}

void add_cost(const CovLayout& lay, int block, double scale, std::vector<std::pair<int, double>>& lin) {
  const auto& b = lay.blocks[block];
  for (std::size_t a = 0; a < lay.basis.size(); ++a) {
    const double tr = trace_of(lay.basis[a]);
    if (tr != 0.0) lin.emplace_back(b.offset + static_cast<int>(a), -scale * tr);
  }
}

const RealMatrix& block_value(const CovLayout& lay, const CovarianceSet& c, int block) {
  const int l = block / lay.per_cell();
  const int k = block % lay.per_cell();
  return k == lay.K ? c.p_common[l] : c.p_private[l][k];
}

// tilde r_p(l,k) as a LogDetAffine plus extra linear terms.
// The whole row is multiplied by `scale`, which keeps large-lambda rows well conditioned.
std::unique_ptr<LogDetAffine> private_surrogate(const CovLayout& lay, const CovarianceExpansion& exp, int l,
                                                int k, std::vector<std::pair<int, double>> lin,
                                                double constant, double scale = 1.0) {
  std::vector<RealMatrix> chans;
  for (int i = 0; i < lay.L; ++i) chans.push_back(exp.channels.h[l][k][i]);
  std::vector<LogDetAffine::Term> terms;
  constant -= exp.r_p2[l][k];
  const RealMatrix w_own = exp.private_weight(l, k, l);
  for (int j = 0; j < lay.K; ++j) {
    terms.push_back({lay.private_block(l, j), l});
    if (j != k) add_linearization(lay, lay.private_block(l, j), w_own, exp.covs.p_private[l][j], lin, constant);
  }
  for (int i = 0; i < lay.L; ++i) {
    if (i == l) continue;
    const RealMatrix w = exp.private_weight(l, k, i);
    for (int b : lay.cell_blocks(i)) {
      terms.push_back({b, i});
      add_linearization(lay, b, w, block_value(lay, exp.covs, b), lin, constant);
    }
  }
  for (auto& [i, c] : lin) c *= scale;
  return std::make_unique<LogDetAffine>(scale * kHalfBitsPerNat, exp.channels.noise[l][k], lay.blocks,
                                        std::move(chans), std::move(terms), lin, scale * constant);
}

std::unique_ptr<LogDetAffine> common_surrogate(const CovLayout& lay, const CovarianceExpansion& exp, int l,
                                               int k, std::vector<std::pair<int, double>> lin,
                                               double constant) {
  std::vector<RealMatrix> chans;
  for (int i = 0; i < lay.L; ++i) chans.push_back(exp.channels.h[l][k][i]);
  std::vector<LogDetAffine::Term> terms;
  constant -= exp.r_c2[l][k];
  const RealMatrix w_own = exp.common_weight(l, k, l);
  for (int j = 0; j < lay.K; ++j) {
    terms.push_back({lay.private_block(l, j), l});
    add_linearization(lay, lay.private_block(l, j), w_own, exp.covs.p_private[l][j], lin, constant);
  }
  terms.push_back({lay.common_block(l), l});
  for (int i = 0; i < lay.L; ++i) {
    if (i == l) continue;
    const RealMatrix w = exp.common_weight(l, k, i);
    for (int b : lay.cell_blocks(i)) {
      terms.push_back({b, i});
      add_linearization(lay, b, w, block_value(lay, exp.covs, b), lin, constant);
    }
  }
  return std::make_unique<LogDetAffine>(kHalfBitsPerNat, exp.channels.noise[l][k], lay.blocks, std::move(chans),
                                        std::move(terms), lin, constant);
}

RealMatrix scaled_identity(int dim, double trace) { return RealMatrix::Identity(dim, dim) * (trace / dim); }

} // namespace

void SolverSettings::validate() const {
  if (!(outer_tol > 0.0) || max_outer <= 0 || !(dinkelbach_tol > 0.0) || max_dinkelbach <= 0 ||
      ccp_inner_iters <= 0 || !(epsilon0 > 0.0) || !(epsilon_decay > 0.0) || !(barrier.mu0 > 0.0) ||
      !(barrier.mu_factor > 1.0) || !(barrier.mu_min > 0.0) || !(barrier.grad_tol > 0.0) ||
      barrier.max_newton <= 0)
    throw InvalidConfig("solver settings must be positive");
}

std::string to_string(HalfStep h) {
  switch (h) {
    case HalfStep::Init:
      return "init";
    case HalfStep::Covariance:
      return "P";
    case HalfStep::Ris:
      return "theta";
  }
  return "?";
}

bool refresh_objective(const Instance& inst, OptState& s) {
  const RealChannels ch = inst.model.real_channels(s.ris);
  const RateReport rates = compute_rates(ch, s.covs);
  std::vector<double> cell = rates.r_c_cell;
  if (!inst.scheme.rate_splitting) std::fill(cell.begin(), cell.end(), 0.0);
  const auto alloc = allocate_common_rate(rates.r_p, cell, s.covs, inst.ee);
  if (!alloc) {
    s.objective = -kInf;
    return false;
  }
  s.covs.r_common_alloc = *alloc;
  s.objective = evaluate(ch, s.covs, inst.ee).objective;
  return true;
}

CovarianceSet initial_covariances(int num_cells, int users_per_cell, int n_bs, double p_max,
                                  bool rate_splitting) {
  CovarianceSet c = CovarianceSet::zeros(num_cells, users_per_cell, n_bs);
  const double each = p_max / (2.0 * (users_per_cell + 1));
  for (int l = 0; l < num_cells; ++l) {
    for (auto& p : c.p_private[l]) p = scaled_identity(2 * n_bs, each);
    if (rate_splitting) c.p_common[l] = scaled_identity(2 * n_bs, each);
  }
  return c;
}

RISConfig initial_ris(int num_ris, int n_ris, FeasibilitySet set, StarMode mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  RISConfig ris = RISConfig::zeros(num_ris, n_ris, set, mode);
  const double amp = set == FeasibilitySet::TU ? 0.5 : std::sqrt(0.5);
  for (int m = 0; m < num_ris; ++m)
    for (int n = 0; n < n_ris; ++n) {
      const double pr = phase(rng);
      const double pt = set == FeasibilitySet::TN ? pr + 0.5 * std::numbers::pi : phase(rng);
      ris.theta_r[m](n) = std::polar(amp, pr);
      ris.theta_t[m](n) = std::polar(amp, pt);
    }
  if (mode == StarMode::ModeSwitching) {
    for (int m = 0; m < num_ris; ++m) {
      std::vector<ElementMode> mask(n_ris, ElementMode::TransmitOnly);
      std::fill(mask.begin(), mask.begin() + (n_ris + 1) / 2, ElementMode::ReflectOnly);
      std::shuffle(mask.begin(), mask.end(), rng);
      ris.ms_mask[m] = mask;
    }
    ris = apply_ms_mask(ris);
  }
  return ris;
}

OptState initial_state(const Instance& inst, RISConfig ris) {
  OptState s;
  s.covs = initial_covariances(inst.model.num_cells(), inst.model.users_per_cell(), inst.model.n_bs(),
                               inst.ee.p_max, inst.scheme.rate_splitting);
  s.ris = std::move(ris);
  if (!refresh_objective(inst, s)) throw InfeasibleThresholds("initial point violates the rate thresholds");
  return s;
}

double parametric_value(const Instance& inst, const CovarianceExpansion& exp, const CovarianceSet& covs,
                        double lambda) {
  double v = kInf;
  for (int l = 0; l < covs.num_cells(); ++l)
    for (int k = 0; k < covs.users_per_cell(); ++k) {
      const double r = surrogate_private_rate_P(exp, covs, l, k) + covs.r_common_alloc[l][k];
      v = std::min(v, r - lambda * inst.ee.alpha[l][k] * inst.ee.consumed_power(covs, l, k));
    }
  return v;
}

ParametricResult parametric_subproblem(const Instance& inst, const CovarianceExpansion& exp,
                                       const CovarianceSet& start, double lambda,
                                       const SolverSettings& settings) {
  const int L = inst.model.num_cells(), K = inst.model.users_per_cell();
  const int dim = 2 * inst.model.n_bs();
  const EEParams& ee = inst.ee;
  const bool rs = inst.scheme.rate_splitting;

  // Strictly interior start: pull the covariances slightly toward a scaled identity.
  constexpr double beta = 1e-3;
  CovarianceSet x0c = start;
  const double center = ee.p_max / (2.0 * (rs ? K + 1 : K));
  for (int l = 0; l < L; ++l) {
    for (auto& p : x0c.p_private[l]) p = (1.0 - beta) * p + beta * scaled_identity(dim, center);
    if (rs) x0c.p_common[l] = (1.0 - beta) * x0c.p_common[l] + beta * scaled_identity(dim, center);
  }
  std::vector<bool> keep(L, false);
  std::vector<double> share(L, 0.0);
  if (rs)
    for (int l = 0; l < L; ++l) {
      double m = kInf;
      for (int k = 0; k < K; ++k) m = std::min(m, surrogate_common_rate_P(exp, x0c, l, k));
      keep[l] = m > 1e-10;
      share[l] = keep[l] ? 0.5 * m / K : 0.0;
    }
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) x0c.r_common_alloc[l][k] = share[l];

  const CovLayout lay(inst, keep);
  barrier::Problem prob;
  prob.num_vars = lay.num_vars;
  prob.objective = RealVector::Zero(lay.num_vars);
  prob.objective(lay.t) = 1.0;
  prob.psd_blocks = lay.blocks;

  // The epigraph variable is t / s; with s the largest power penalty the rows stay O(1) even for huge lambda.
  double max_alpha = 0.0;
  for (const auto& row : ee.alpha)
    for (double a : row) max_alpha = std::max(max_alpha, a);
  const double s = std::max(1.0, lambda * max_alpha * (ee.p_c + ee.eta * ee.p_max));

  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      const double scale = lambda * ee.alpha[l][k] * ee.eta;
      std::vector<std::pair<int, double>> lin{{lay.t, -s}};
      if (lay.rc[l][k] >= 0) lin.emplace_back(lay.rc[l][k], 1.0);
      add_cost(lay, lay.private_block(l, k), scale, lin);
      if (rs) add_cost(lay, lay.common_block(l), scale / K, lin);
      prob.constraints.push_back(
          private_surrogate(lay, exp, l, k, lin, -lambda * ee.alpha[l][k] * ee.p_c, 1.0 / s));

      if (ee.r_th[l][k] > 0.0) {
        std::vector<std::pair<int, double>> lin_th;
        if (lay.rc[l][k] >= 0) lin_th.emplace_back(lay.rc[l][k], 1.0);
        prob.constraints.push_back(private_surrogate(lay, exp, l, k, lin_th, -ee.r_th[l][k]));
      }
    }
  for (int l = 0; l < L; ++l) {
    if (!keep[l]) continue;
    for (int k = 0; k < K; ++k) {
      std::vector<std::pair<int, double>> lin;
      for (int j = 0; j < K; ++j) lin.emplace_back(lay.rc[l][j], -1.0);
      prob.constraints.push_back(common_surrogate(lay, exp, l, k, lin, 0.0));
      prob.constraints.push_back(
          std::make_unique<LinearFunction>(std::vector<int>{lay.rc[l][k]}, RealVector::Ones(1), 0.0));
    }
  }
  for (int l = 0; l < L; ++l) {
    std::vector<int> support;
    std::vector<double> coeffs;
    for (int b : lay.cell_blocks(l))
      for (std::size_t a = 0; a < lay.basis.size(); ++a) {
        support.push_back(lay.blocks[b].offset + static_cast<int>(a));
        coeffs.push_back(-trace_of(lay.basis[a]));
      }
    prob.constraints.push_back(std::make_unique<LinearFunction>(
        std::move(support), Eigen::Map<RealVector>(coeffs.data(), coeffs.size()), ee.p_max));
  }

  const double g0 = parametric_value(inst, exp, x0c, lambda);
  RealVector x0 = lay.pack(x0c, (g0 - std::max(1e-6, 1e-3 * std::abs(g0))) / s);
  if (!barrier::strictly_feasible(prob, x0)) {
    auto found = barrier::find_interior(prob, x0, settings.barrier);
    if (!found) throw NumericalFailure("covariance subproblem: no interior point");
    x0 = *found;
  }
  const barrier::Result res = barrier::maximize(prob, x0, settings.barrier);

  ParametricResult out;
  out.covs = lay.unpack(res.x);
  out.value = parametric_value(inst, exp, out.covs, lambda);
  out.newton_iterations = res.newton_iterations;
  const double v_start = parametric_value(inst, exp, start, lambda);
  if (!(out.value >= v_start)) {
    out.covs = start;
    out.value = v_start;
  }
  return out;
}

OptState solve_p_step(const Instance& inst, const OptState& state, const SolverSettings& settings,
                      DinkelbachLog* log) {
  const RealChannels ch = inst.model.real_channels(state.ris);
  const RateReport rates = compute_rates(ch, state.covs);
  for (int l = 0; l < state.covs.num_cells(); ++l)
    for (int k = 0; k < state.covs.users_per_cell(); ++k)
      if (rates.r_p[l][k] + state.covs.r_common_alloc[l][k] < inst.ee.r_th[l][k] - 1e-9)
        throw InfeasibleThresholds("rate threshold violated at the expansion point");

  const CovarianceExpansion exp = CovarianceExpansion::at(ch, state.covs);
  auto ratio = [&](const CovarianceSet& c) {
    double v = kInf;
    for (int l = 0; l < c.num_cells(); ++l)
      for (int k = 0; k < c.users_per_cell(); ++k) {
        const double r = surrogate_private_rate_P(exp, c, l, k) + c.r_common_alloc[l][k];
        v = std::min(v, r / (inst.ee.alpha[l][k] * inst.ee.consumed_power(c, l, k)));
      }
    return v;
  };

  CovarianceSet cur = state.covs;
  double lambda = std::max(0.0, ratio(cur));
  int iters = 0;
  for (; iters < settings.max_dinkelbach; ++iters) {
    ParametricResult pr;
    try {
      pr = parametric_subproblem(inst, exp, cur, lambda, settings);
    } catch (const NumericalFailure&) {
      break;
    }
    if (log) {
      log->lambda.push_back(lambda);
      log->value.push_back(pr.value);
    }
    cur = pr.covs;
    if (pr.value <= settings.dinkelbach_tol) {
      ++iters;
      break;
    }
    const double next = ratio(cur);
    if (!(next > lambda)) {
      ++iters;
      break;
    }
    lambda = next;
  }

  OptState next = state;
  next.covs = cur;
  next.inner_iters += iters;
  const bool ok = refresh_objective(inst, next);
  if (ok && !(next.objective > 0.0) && !(state.objective > 0.0)) {
    // Nothing is achievable: spend no power.
    OptState idle = next;
    idle.covs = CovarianceSet::zeros(state.covs.num_cells(), state.covs.users_per_cell(), inst.model.n_bs());
    if (refresh_objective(inst, idle) && idle.objective >= next.objective) return idle;
  }
  if (!ok || next.objective < state.objective) {
    OptState kept = state;
    kept.inner_iters = next.inner_iters;
    return kept;
  }
  return next;
}

double ccp_linearized_constraint(cdouble r_prev, cdouble t_prev, cdouble r, cdouble t) {
  return std::norm(r_prev) + 2.0 * (r_prev * std::conj(r - r_prev)).real() + std::norm(t_prev) +
         2.0 * (t_prev * std::conj(t - t_prev)).real();
}

ProjectedPair project_theta(cdouble r, cdouble t, cdouble prev_r, cdouble prev_t) {
  const double n = std::sqrt(std::norm(r) + std::norm(t));
  if (!(n > 0.0) || !std::isfinite(n)) return {prev_r, prev_t, true};
  return {r / n, t / n, false};
}

RISConfig project_ris(const RISConfig& candidate, const RISConfig& prev) {
  RISConfig out = candidate;
  for (int m = 0; m < out.num_ris(); ++m)
    for (int n = 0; n < out.n_ris(); ++n) {
      auto p = project_theta(candidate.theta_r[m](n), candidate.theta_t[m](n), prev.theta_r[m](n),
                             prev.theta_t[m](n));
      if (p.degenerate) std::clog << "warning: zero RIS coefficient pair, keeping previous values\n";
      if (out.set == FeasibilitySet::TN && p.r != 0.0 && p.t != 0.0) {
        const double d = std::arg(p.t) - std::arg(p.r);
        const double target = std::sin(d) >= 0.0 ? 0.5 * std::numbers::pi : -0.5 * std::numbers::pi;
        const double shift = std::remainder(d - target, 2.0 * std::numbers::pi);
        p.r *= std::polar(1.0, 0.5 * shift);
        p.t *= std::polar(1.0, -0.5 * shift);
      }
      out.theta_r[m](n) = p.r;
      out.theta_t[m](n) = p.t;
    }
  if (out.mode == StarMode::ModeSwitching) out = apply_ms_mask(out);
  return out;
}

bool accept_candidate(double candidate_objective, double previous_objective) {
  return candidate_objective >= previous_objective;
}

RISConfig apply_ms_mask(const RISConfig& ris) {
  RISConfig out = ris;
  if (out.mode != StarMode::ModeSwitching) return out;
  for (int m = 0; m < out.num_ris(); ++m)
    for (int n = 0; n < out.n_ris(); ++n) {
      const bool reflect = out.ms_mask.at(m).at(n) == ElementMode::ReflectOnly;
      cdouble& keep = reflect ? out.theta_r[m](n) : out.theta_t[m](n);
      cdouble& drop = reflect ? out.theta_t[m](n) : out.theta_r[m](n);
      if (out.set == FeasibilitySet::TU) {
        const double amp = std::sqrt(std::norm(keep) + std::norm(drop));
        keep = keep != 0.0 ? std::polar(amp, std::arg(keep)) : cdouble(amp, 0.0);
      } else {
        keep = keep != 0.0 ? keep / std::abs(keep) : cdouble(1.0, 0.0);
      }
      drop = 0.0;
    }
  return out;
}

namespace {

// One surrogate maximization of the RIS step around `anchor`. Returns the raw (unprojected)
// solution and its surrogate objective, or nothing when no interior start exists.
struct ThetaSolve {
  RISConfig ris;
  double surrogate_objective = -kInf;
};

std::optional<ThetaSolve> solve_theta_surrogate(const Instance& inst, const RISConfig& anchor,
                                                const CovarianceSet& covs, double epsilon,
                                                const SolverSettings& settings) {
  const int L = inst.model.num_cells(), K = inst.model.users_per_cell();
  const EEParams& ee = inst.ee;
  const bool relaxed = anchor.set != FeasibilitySet::TU;
  const bool rs = inst.scheme.rate_splitting;
  const RisExpansion exp = RisExpansion::at(inst.model, anchor, covs);
  const ThetaLayout& layout = exp.layout;
  const int nt = layout.num_vars();

  const RealVector x_bar = layout.pack(anchor);
  const double delta = relaxed ? std::min(1e-3, 0.25 * epsilon) : 1e-3;
  const RealVector th0 = (1.0 - delta) * x_bar;

  std::vector<bool> keep(L, false);
  std::vector<double> share(L, 0.0);
  if (rs)
    for (int l = 0; l < L; ++l) {
      double m = kInf;
      for (int k = 0; k < K; ++k) m = std::min(m, exp.common_bound[l][k](th0));
      keep[l] = m > 1e-10;
      share[l] = keep[l] ? 0.5 * m / K : 0.0;
    }
  std::vector<std::vector<int>> rc(L, std::vector<int>(K, -1));
  int nv = nt;
  for (int l = 0; l < L; ++l)
    if (keep[l])
      for (int k = 0; k < K; ++k) rc[l][k] = nv++;
  const int t = nv++;

  barrier::Problem prob;
  prob.num_vars = nv;
  prob.objective = RealVector::Zero(nv);
  prob.objective(t) = 1.0;

  auto user_quadratic = [&](const QuadraticForm& f, const std::vector<std::pair<int, double>>& extra,
                            double shift) {
    // Coefficients no channel depends on only enter through the element constraints.
    std::vector<int> support;
    for (int a = 0; a < nt; ++a)
      if (f.linear(a) != 0.0 || !f.z.col(a).isZero(0.0)) support.push_back(a);
    const int na = static_cast<int>(support.size());
    RealVector b(na + extra.size());
    RealMatrix z = RealMatrix::Zero(f.z.rows(), na + extra.size());
    for (int a = 0; a < na; ++a) {
      b(a) = f.linear(support[a]);
      z.col(a) = f.z.col(support[a]);
    }
    for (std::size_t e = 0; e < extra.size(); ++e) {
      support.push_back(extra[e].first);
      b(na + e) = extra[e].second;
    }
    return std::make_unique<ConcaveQuadratic>(std::move(support), f.constant + shift, std::move(b), f.z0,
                                              std::move(z));
  };

  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      const double cost = ee.alpha[l][k] * ee.consumed_power(covs, l, k);
      std::vector<std::pair<int, double>> extra{{t, -cost}};
      if (rc[l][k] >= 0) extra.emplace_back(rc[l][k], 1.0);
      prob.constraints.push_back(user_quadratic(exp.private_bound[l][k], extra, 0.0));
      if (ee.r_th[l][k] > 0.0) {
        std::vector<std::pair<int, double>> extra_th;
        if (rc[l][k] >= 0) extra_th.emplace_back(rc[l][k], 1.0);
        prob.constraints.push_back(user_quadratic(exp.private_bound[l][k], extra_th, -ee.r_th[l][k]));
      }
    }
  for (int l = 0; l < L; ++l) {
    if (!keep[l]) continue;
    for (int k = 0; k < K; ++k) {
      std::vector<std::pair<int, double>> extra;
      for (int j = 0; j < K; ++j) extra.emplace_back(rc[l][j], -1.0);
      prob.constraints.push_back(user_quadratic(exp.common_bound[l][k], extra, 0.0));
      prob.constraints.push_back(
          std::make_unique<LinearFunction>(std::vector<int>{rc[l][k]}, RealVector::Ones(1), 0.0));
    }
  }

  // Element constraints.
  for (int m = 0; m < anchor.num_ris(); ++m)
    for (int n = 0; n < anchor.n_ris(); ++n) {
      std::vector<int> vars;
      for (UserSide side : {UserSide::Reflect, UserSide::Transmit}) {
        const int a = layout.index_of(m, n, side);
        if (a >= 0) {
          vars.push_back(a);
          vars.push_back(a + 1);
        }
      }
      const int nvars = static_cast<int>(vars.size());
      prob.constraints.push_back(std::make_unique<ConcaveQuadratic>(
          vars, 1.0, RealVector::Zero(nvars), RealVector::Zero(nvars), RealMatrix::Identity(nvars, nvars)));
      if (relaxed) {
        RealVector coeffs(nvars);
        double norm2 = 0.0;
        for (int a = 0; a < nvars; ++a) {
          coeffs(a) = 2.0 * x_bar(vars[a]);
          norm2 += x_bar(vars[a]) * x_bar(vars[a]);
        }
        prob.constraints.push_back(
            std::make_unique<LinearFunction>(vars, std::move(coeffs), -norm2 - (1.0 - epsilon)));
      }
      if (anchor.set == FeasibilitySet::TN && nvars == 4)
        for (double sgn : {1.0, -1.0}) {
          RealMatrix z(2, 4);
          z << 1.0, 0.0, sgn, 0.0, 0.0, 1.0, 0.0, sgn;
          prob.constraints.push_back(
              std::make_unique<ConcaveQuadratic>(vars, 1.0, RealVector::Zero(4), RealVector::Zero(2), z));
        }
    }

  RealVector x0(nv);
  x0.head(nt) = th0;
  double g0 = kInf;
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      if (rc[l][k] >= 0) x0(rc[l][k]) = share[l];
      const double cost = ee.alpha[l][k] * ee.consumed_power(covs, l, k);
      g0 = std::min(g0, (exp.private_bound[l][k](th0) + share[l]) / cost);
    }
  x0(t) = g0 - std::max(1e-6, 1e-3 * std::abs(g0));
  if (!barrier::strictly_feasible(prob, x0)) {
    auto found = barrier::find_interior(prob, x0, settings.barrier);
    if (!found) return std::nullopt;
    x0 = *found;
  }
  const barrier::Result res = barrier::maximize(prob, x0, settings.barrier);
  const RealVector th = res.x.head(nt);

  ThetaSolve out;
  out.ris = layout.unpack(th, anchor);
  std::vector<std::vector<double>> r_p(L, std::vector<double>(K));
  std::vector<double> cell(L, 0.0);
  for (int l = 0; l < L; ++l) {
    double m = kInf;
    for (int k = 0; k < K; ++k) {
      r_p[l][k] = exp.private_bound[l][k](th);
      m = std::min(m, exp.common_bound[l][k](th));
    }
    if (keep[l]) cell[l] = std::max(0.0, m);
  }
  out.surrogate_objective = fairness_value(r_p, cell, covs, ee);
  return out;
}

double max_coefficient_change(const RISConfig& a, const RISConfig& b) {
  double d = 0.0;
  for (int m = 0; m < a.num_ris(); ++m) {
    d = std::max(d, (a.theta_r[m] - b.theta_r[m]).cwiseAbs().maxCoeff());
    d = std::max(d, (a.theta_t[m] - b.theta_t[m]).cwiseAbs().maxCoeff());
  }
  return d;
}

} // namespace

OptState solve_theta_step(const Instance& inst, const OptState& state, const SolverSettings& settings,
                          ThetaStepInfo* info) {
  ThetaStepInfo local;
  ThetaStepInfo& inf = info ? *info : local;
  inf = {};
  if (!inst.scheme.optimize_ris || state.ris.num_ris() == 0 || state.ris.n_ris() == 0) return state;

  if (state.ris.set == FeasibilitySet::TU) {
    inf.rounds = 1;
    const auto sol = solve_theta_surrogate(inst, state.ris, state.covs, 0.0, settings);
    // The surrogate is tight at the previous point, so a surrogate value at least as large
    // certifies ascent; anything below it is solver inaccuracy at a stationary point.
    if (!sol || !(sol->surrogate_objective >= state.objective)) return state;
    OptState next = state;
    next.ris = sol->ris;
    next.inner_iters += 1;
    if (!refresh_objective(inst, next) || next.objective < state.objective) return state;
    inf.accepted = true;
    return next;
  }

  OptState best = state;
  RISConfig anchor = state.ris;
  double eps = settings.epsilon0;
  for (int round = 0; round < settings.ccp_inner_iters; ++round) {
    const auto sol = solve_theta_surrogate(inst, anchor, state.covs, eps, settings);
    ++inf.rounds;
    if (!sol) break;
    const RISConfig projected = project_ris(sol->ris, anchor);
    inf.projected = true;
    OptState cand = state;
    cand.ris = projected;
    cand.epsilon = eps;
    if (refresh_objective(inst, cand) && cand.objective > best.objective) best = cand;
    const double change = max_coefficient_change(projected, anchor);
    anchor = projected;
    eps *= settings.epsilon_decay;
    if (change <= 1e-9) break;
  }
  inf.acceptance_checked = true;
  OptState out = state;
  out.inner_iters += inf.rounds;
  out.epsilon = eps;
  if (accept_candidate(best.objective, state.objective) && best.objective > state.objective) {
    out.ris = best.ris;
    out.covs = best.covs;
    out.objective = best.objective;
    inf.accepted = true;
  }
  return out;
}

AoResult ao_loop(const Instance& inst, OptState initial, const SolverSettings& settings) {
  settings.validate();
  AoResult out;
  OptState s = std::move(initial);
  if (!refresh_objective(inst, s)) throw InfeasibleThresholds("initial point violates the rate thresholds");
  out.trace.push_back({0, HalfStep::Init, s.objective, s.epsilon, true, false, false});

  for (int it = 1; it <= settings.max_outer; ++it) {
    const double old = s.objective;
    s.outer_iter = it;
    s = solve_p_step(inst, s, settings);
    out.trace.push_back({it, HalfStep::Covariance, s.objective, s.epsilon, true, false, false});
    if (inst.scheme.optimize_ris) {
      ThetaStepInfo info;
      s = solve_theta_step(inst, s, settings, &info);
      out.trace.push_back(
          {it, HalfStep::Ris, s.objective, s.epsilon, info.accepted, info.projected, info.acceptance_checked});
    }
    if (std::abs(s.objective - old) <= settings.outer_tol * std::abs(old)) break;
  }
  out.state = std::move(s);
  return out;
}

} // namespace starris
