// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The starris Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "starris/barrier.hpp"
#include "starris/surrogates.hpp"

namespace starris {

struct SolverSettings {
  double outer_tol = 1e-4;  // relative objective change
  int max_outer = 50;
  double dinkelbach_tol = 1e-6;
  int max_dinkelbach = 30;
  int ccp_inner_iters = 10;
  double epsilon0 = 0.1;
  double epsilon_decay = 0.5;
  barrier::Settings barrier;

  void validate() const;
};

enum class CovarianceStructure {
  General,  // improper signaling: any symmetric PSD real covariance
  Proper,   // [[A, -B], [B, A]] only
};

struct SchemeOptions {
  bool rate_splitting = true;  // false: treat interference as noise, no common streams
  CovarianceStructure structure = CovarianceStructure::General;
  bool optimize_ris = true;
};

/// Everything held fixed during one optimization run.
struct Instance {
  SystemModel model;
  EEParams ee;
  SchemeOptions scheme;
};

struct OptState {
  CovarianceSet covs;
  RISConfig ris;
  double objective = 0.0;
  int outer_iter = 0;
  int inner_iters = 0;  // Dinkelbach + CCP rounds so far
  double epsilon = 0.0;
};

enum class HalfStep { Init, Covariance, Ris };
std::string to_string(HalfStep h);

struct TraceRecord {
  int outer_iter = 0;
  HalfStep step = HalfStep::Init;
  double objective = 0.0;
  double epsilon = 0.0;
  bool accepted = true;
  bool projected = false;
  bool acceptance_checked = false;
};

/// Recomputes the common-rate split for the current rates and the objective.
/// Returns false (objective set to -inf) when the thresholds cannot be met.
bool refresh_objective(const Instance& inst, OptState& s);

CovarianceSet initial_covariances(int num_cells, int users_per_cell, int n_bs, double p_max,
                                  bool rate_splitting);

/// Uniform-phase coefficients: |r|^2 = |t|^2 = 1/2 for TI/TN (phases a quarter turn apart
/// under TN), 1/4 each for TU. MS configurations get a random half/half mask.
RISConfig initial_ris(int num_ris, int n_ris, FeasibilitySet set, StarMode mode, std::uint64_t seed);

OptState initial_state(const Instance& inst, RISConfig ris);

struct ParametricResult {
  CovarianceSet covs;
  double value = 0.0;  // min_lk [tilde r_lk - lambda * alpha_lk * cost_lk]
  int newton_iterations = 0;
};

/// Concave max-min inside one Dinkelbach iteration, warm-started at `start`
/// (whose r_common_alloc must satisfy the surrogate common-rate constraints).
ParametricResult parametric_subproblem(const Instance& inst, const CovarianceExpansion& exp,
                                       const CovarianceSet& start, double lambda,
                                       const SolverSettings& settings);

/// Parametric value of `covs` (with its own r_common_alloc) under the surrogate rates.
double parametric_value(const Instance& inst, const CovarianceExpansion& exp, const CovarianceSet& covs,
                        double lambda);

struct DinkelbachLog {
  std::vector<double> lambda;
  std::vector<double> value;  // parametric optimum at each lambda
};

OptState solve_p_step(const Instance& inst, const OptState& state, const SolverSettings& settings,
                      DinkelbachLog* log = nullptr);

struct ThetaStepInfo {
  bool accepted = false;
  bool projected = false;
  bool acceptance_checked = false;
  int rounds = 0;
};

OptState solve_theta_step(const Instance& inst, const OptState& state, const SolverSettings& settings,
                          ThetaStepInfo* info = nullptr);

/// zeta = |r_prev|^2 + 2 Re(r_prev conj(r - r_prev)) + |t_prev|^2 + 2 Re(t_prev conj(t - t_prev)).
double ccp_linearized_constraint(cdouble r_prev, cdouble t_prev, cdouble r, cdouble t);

struct ProjectedPair {
  cdouble r;
  cdouble t;
  bool degenerate = false;  // input was (0, 0); previous pair retained
};

/// Scales (r, t) onto |r|^2 + |t|^2 = 1.
ProjectedPair project_theta(cdouble r, cdouble t, cdouble prev_r, cdouble prev_t);

/// Element-wise projection of a relaxed solution back onto the configuration's set. Under TN
/// the pair is additionally rotated to a quarter-turn phase offset, which is what
/// |r + t|^2 <= 1 and |r - t|^2 <= 1 require on the unit sphere.
RISConfig project_ris(const RISConfig& candidate, const RISConfig& prev);

/// Rule for keeping a RIS candidate: the objective must not decrease.
bool accept_candidate(double candidate_objective, double previous_objective);

/// Zeroes masked coefficients; under TI/TN the survivor is set to unit modulus, under TU it
/// takes over the pair's whole amplitude.
RISConfig apply_ms_mask(const RISConfig& ris);

struct AoResult {
  OptState state;
  std::vector<TraceRecord> trace;
};

AoResult ao_loop(const Instance& inst, OptState initial, const SolverSettings& settings);

} // namespace starris
