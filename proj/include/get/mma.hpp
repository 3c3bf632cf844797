#pragma once

#include "get/common.hpp"

namespace get {

struct MmaOptions {
  double asymptote_init = 0.5;   // initial asymptote offset, fraction of range
  double asymptote_incr = 1.2;   // widening factor on monotone iterates
  double asymptote_decr = 0.7;   // tightening factor on oscillation
  double move_limit = 0.1;       // per-iteration move, fraction of range
  double raa0 = 1e-5;            // convexity floor
  double constraint_penalty = 1000.0;  // weight of the feasibility relaxation
};

/// Snapshot of the last convex separable subproblem, exposed so tests can
/// verify KKT stationarity independently of the dual solve.
struct MmaSubproblem {
  VectorXd low, upp, alfa, beta;
  VectorXd p0, q0, p1, q1;
  double b = 0.0;       // subproblem constraint bound
  double lambda = 0.0;  // multiplier at the solution
  double y = 0.0;       // feasibility relaxation at the solution
};

/// Method of Moving Asymptotes with a single inequality constraint g <= 0.
/// Asymptotes adapt per variable from the last two iterates; the subproblem
/// is solved exactly via its one-dimensional dual.
class MmaSolver {
 public:
  MmaSolver(VectorXd lower_bounds, VectorXd upper_bounds, MmaOptions options = {});

  /// One design update. f0/df0: objective value and gradient; g/dg:
  /// constraint value and gradient. Throws on non-finite input.
  VectorXd update(const VectorXd& x, double f0, const VectorXd& df0, double g,
                  const VectorXd& dg);

  void reset();
  int iteration() const { return iter_; }
  const MmaSubproblem& last_subproblem() const { return sub_; }

 private:
  Eigen::Index n_;
  VectorXd xmin_, xmax_, range_;
  MmaOptions opt_;
  int iter_ = 0;
  VectorXd xold1_, xold2_, low_, upp_;
  MmaSubproblem sub_;
};

}  // namespace get
