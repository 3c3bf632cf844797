#include "get/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace get {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

template <int D>
DesignEvaluation<D> evaluate_design(const ResolvedProblem<D>& problem,
                                    const Ensemble<D>& ensemble, const ProjectionParams& proj,
                                    FeaSystem<D>& fea) {
  DesignEvaluation<D> ev;
  ev.nodal_tdf = nodal_tdf(ensemble, problem.mesh);
  ev.densities = project_densities(ev.nodal_tdf, problem.mesh, proj);
  apply_nondesign<D>(ev.densities, problem.clamp_kind);
  fea.assemble(ev.densities);
  ev.u = fea.solve(problem.force);
  if (problem.objective == ObjectiveKind::mutual_potential_energy) {
    ev.u2 = fea.solve(problem.output_force);
    const auto mpe = mutual_potential_energy(fea, ev.u, ev.u2, problem.output_force);
    const double denom = std::max({std::abs(mpe.via_force), std::abs(mpe.via_stiffness), 1e-12});
    if (std::abs(mpe.via_force - mpe.via_stiffness) > 1e-8 * denom) {
      throw SolverError("mutual potential energy forms disagree beyond 1e-8", 0);
    }
    ev.objective = mpe.via_force;
  } else {
    ev.objective = compliance(ev.u, problem.force);
  }
  double vol = 0.0;
  for (double rho : ev.densities) vol += rho;
  ev.volume_fraction = vol / problem.mesh.num_elements();
  return ev;
}

template <int D>
void variable_bounds(const ResolvedProblem<D>& problem, int field_count, VectorXd& lower,
                     VectorXd& upper) {
  constexpr int P = kParamsPerField<D>;
  const Vec<D> ext = problem.mesh.extent();
  const double sigma_lo = 0.01 * ext.minCoeff();
  const double sigma_hi = ext.maxCoeff();
  const double angle_hi = 4.0 * std::numbers::pi;
  lower.resize(P * field_count);
  upper.resize(P * field_count);
  for (int i = 0; i < field_count; ++i) {
    const int at = P * i;
    for (int k = 0; k < D; ++k) {
      lower[at + k] = problem.mesh.origin[k];
      upper[at + k] = problem.mesh.origin[k] + ext[k];
      lower[at + D + k] = sigma_lo;
      upper[at + D + k] = sigma_hi;
    }
    for (int a = 0; a < kAnglesPerField<D>; ++a) {
      lower[at + 2 * D + a] = -angle_hi;
      upper[at + 2 * D + a] = angle_hi;
    }
  }
}

template <int D>
OptimizationResult<D> run_optimization(const ResolvedProblem<D>& problem,
                                       Ensemble<D> initial_ensemble,
                                       const OptimizationParams& params) {
  if (params.max_iters < 0) throw DefinitionError("max_iters must be >= 0");
  OptimizationResult<D> result;
  result.ensemble = std::move(initial_ensemble);
  Ensemble<D>& ensemble = result.ensemble;

  FeaSystem<D> fea(problem.mesh, problem.material, problem.dirichlet, problem.springs,
                   params.solver);
  if (params.max_iters == 0) {
    result.final_eval = evaluate_design(problem, ensemble, params.projection, fea);
    return result;
  }

  const bool maximize = problem.objective == ObjectiveKind::mutual_potential_energy;
  const bool rounding = params.round_sensitivities.value_or(problem.round_sensitivities);
  const auto design_mask = problem.design_mask();
  const double domain_volume = problem.mesh.num_elements() * problem.mesh.element_volume();

  VectorXd lower, upper;
  variable_bounds(problem, static_cast<int>(ensemble.size()), lower, upper);
  MmaSolver mma(lower, upper, params.mma);

  double objective_scale = 0.0;
  double prev_objective = 0.0;
  int calm_iterations = 0;

  for (int iter = 1; iter <= params.max_iters; ++iter) {
    IterationRecord rec;
    rec.iteration = iter;
    try {
      auto t0 = std::chrono::steady_clock::now();
      std::vector<double> tdf = nodal_tdf(ensemble, problem.mesh);
      std::vector<double> rho = project_densities(tdf, problem.mesh, params.projection);
      apply_nondesign<D>(rho, problem.clamp_kind);
      rec.time_tdf = seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      fea.assemble(rho);
      const VectorXd u = fea.solve(problem.force);
      VectorXd u2;
      if (maximize) {
        u2 = fea.solve(problem.output_force);
        rec.objective = problem.output_force.dot(u);
      } else {
        rec.objective = compliance(u, problem.force);
      }
      double vol = 0.0;
      for (double r : rho) vol += r;
      rec.volume_fraction = vol / problem.mesh.num_elements();
      rec.time_fea = seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      const std::vector<double> energy =
          maximize ? fea.element_energies(u, u2) : fea.element_energies(u, u);
      VectorXd dobj = maximize
                          ? mpe_sensitivity(problem.mesh, ensemble, tdf, params.projection,
                                            energy, design_mask)
                          : compliance_sensitivity(problem.mesh, ensemble, tdf,
                                                   params.projection, energy, design_mask);
      VectorXd dvol =
          volume_sensitivity(problem.mesh, ensemble, tdf, params.projection, design_mask);
      if (rounding) {
        dobj = round_sensitivities(dobj);
        dvol = round_sensitivities(dvol);
      }
      rec.time_sen = seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      double f0 = maximize ? -rec.objective : rec.objective;
      VectorXd df0 = maximize ? VectorXd(-dobj) : dobj;
      if (objective_scale == 0.0) objective_scale = std::max(std::abs(f0), 1e-12);
      f0 /= objective_scale;
      df0 /= objective_scale;
      const double g = rec.volume_fraction - problem.volume_bound;
      const VectorXd dg = dvol / domain_volume;

      const VectorXd x_next = mma.update(pack(ensemble), f0, df0, g, dg);
      if (!x_next.allFinite()) {
        throw NumericalError("design vector became non-finite", iter);
      }
      unpack(x_next, ensemble);
      result.deactivated_total += deactivate_degenerate(ensemble, problem.mesh.h);
      rec.time_mma = seconds_since(t0);
    } catch (const NumericalError&) {
      throw;
    } catch (const Error& err) {
      throw NumericalError(std::string(err.what()) + " (iteration " + std::to_string(iter) +
                               ")",
                           iter);
    }
    rec.active_fields = 0;
    for (const auto& f : ensemble) rec.active_fields += f.active ? 1 : 0;
    result.history.records.push_back(rec);

    const double rel_change =
        iter == 1 ? 1.0
                  : std::abs(rec.objective - prev_objective) /
                        std::max(std::abs(prev_objective), 1e-12);
    const double violation = std::max(0.0, rec.volume_fraction - problem.volume_bound);
    prev_objective = rec.objective;
    if (rel_change < params.objective_rel_tol && violation < params.constraint_tol) {
      ++calm_iterations;
    } else {
      calm_iterations = 0;
    }
    if (calm_iterations >= params.convergence_patience) break;
  }

  result.final_eval = evaluate_design(problem, ensemble, params.projection, fea);
  return result;
}

template DesignEvaluation<2> evaluate_design<2>(const ResolvedProblem<2>&, const Ensemble<2>&,
                                                const ProjectionParams&, FeaSystem<2>&);
template DesignEvaluation<3> evaluate_design<3>(const ResolvedProblem<3>&, const Ensemble<3>&,
                                                const ProjectionParams&, FeaSystem<3>&);
template void variable_bounds<2>(const ResolvedProblem<2>&, int, VectorXd&, VectorXd&);
template void variable_bounds<3>(const ResolvedProblem<3>&, int, VectorXd&, VectorXd&);
template OptimizationResult<2> run_optimization<2>(const ResolvedProblem<2>&, Ensemble<2>,
                                                   const OptimizationParams&);
template OptimizationResult<3> run_optimization<3>(const ResolvedProblem<3>&, Ensemble<3>,
                                                   const OptimizationParams&);

}  // namespace get
