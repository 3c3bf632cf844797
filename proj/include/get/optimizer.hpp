#pragma once

#include "get/mma.hpp"
#include "get/problems.hpp"
#include "get/sensitivity.hpp"

namespace get {

struct OptimizationParams {
  int max_iters = 200;
  double objective_rel_tol = 1e-4;  // relative objective change ...
  double constraint_tol = 1e-4;     // ... and volume violation, both below
  int convergence_patience = 5;     // ... for this many consecutive iterations
  ProjectionParams projection;
  MmaOptions mma;
  std::optional<bool> round_sensitivities;  // overrides the problem's flag
  SolverKind solver = SolverKind::automatic;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;  // C, or J for mechanism problems
  double volume_fraction = 0.0;
  int active_fields = 0;
  double time_tdf = 0.0, time_sen = 0.0, time_fea = 0.0, time_mma = 0.0;
};

struct ConvergenceHistory {
  std::vector<IterationRecord> records;
};

/// One pass of the forward pipeline: TDF -> densities (non-design regions
/// honored) -> FEA -> objective. This is also the path finite-difference
/// oracles perturb.
template <int D>
struct DesignEvaluation {
  std::vector<double> nodal_tdf;
  std::vector<double> densities;
  VectorXd u;
  VectorXd u2;             // MPE pseudo-load response (empty otherwise)
  double objective = 0.0;  // C or J
  double volume_fraction = 0.0;
};

template <int D>
DesignEvaluation<D> evaluate_design(const ResolvedProblem<D>& problem,
                                    const Ensemble<D>& ensemble, const ProjectionParams& proj,
                                    FeaSystem<D>& fea);

template <int D>
struct OptimizationResult {
  Ensemble<D> ensemble;
  ConvergenceHistory history;
  DesignEvaluation<D> final_eval;  // evaluated at the returned ensemble
  int deactivated_total = 0;
};

/// MMA loop: evaluate, differentiate, update, deactivate degenerate fields.
/// Terminates at max_iters or once relative objective change and volume
/// violation stay below tolerance for `convergence_patience` iterations.
template <int D>
OptimizationResult<D> run_optimization(const ResolvedProblem<D>& problem,
                                       Ensemble<D> initial_ensemble,
                                       const OptimizationParams& params);

/// Per-variable MMA bounds: means inside the domain box, sigma in
/// [0.01 min-extent, max-extent], angles in [-4pi, 4pi].
template <int D>
void variable_bounds(const ResolvedProblem<D>& problem, int field_count, VectorXd& lower,
                     VectorXd& upper);

}  // namespace get
