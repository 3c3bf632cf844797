#include "get/mma.hpp"

#include <cmath>

namespace get {

MmaSolver::MmaSolver(VectorXd lower_bounds, VectorXd upper_bounds, MmaOptions options)
    : n_(lower_bounds.size()),
      xmin_(std::move(lower_bounds)),
      xmax_(std::move(upper_bounds)),
      opt_(options) {
  if (xmax_.size() != n_) throw ShapeError("bound vectors differ in length");
  for (Eigen::Index j = 0; j < n_; ++j) {
    if (!(xmin_[j] < xmax_[j])) throw DefinitionError("bounds must satisfy xmin < xmax");
  }
  range_ = xmax_ - xmin_;
  reset();
}

void MmaSolver::reset() {
  iter_ = 0;
  xold1_.resize(0);
  xold2_.resize(0);
  low_.resize(0);
  upp_.resize(0);
}

namespace {

// Primal minimizer of the separable subproblem for a given multiplier.
void primal_of_lambda(const MmaSubproblem& s, double lambda, VectorXd& x) {
  const Eigen::Index n = s.low.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pl = s.p0[j] + lambda * s.p1[j];
    const double ql = s.q0[j] + lambda * s.q1[j];
    const double sp = std::sqrt(pl);
    const double sq = std::sqrt(ql);
    double xj = (sp * s.low[j] + sq * s.upp[j]) / (sp + sq);
    if (xj < s.alfa[j]) xj = s.alfa[j];
    if (xj > s.beta[j]) xj = s.beta[j];
    x[j] = xj;
  }
}

// Subproblem constraint value at x minus its bound (dual gradient without
// the relaxation term).
double constraint_gap(const MmaSubproblem& s, const VectorXd& x) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < s.low.size(); ++j) {
    acc += s.p1[j] / (s.upp[j] - x[j]) + s.q1[j] / (x[j] - s.low[j]);
  }
  return acc - s.b;
}

}  // namespace

VectorXd MmaSolver::update(const VectorXd& x, double f0, const VectorXd& df0, double g,
                           const VectorXd& dg) {
  if (x.size() != n_ || df0.size() != n_ || dg.size() != n_) {
    throw ShapeError("MMA input length mismatch");
  }
  if (!std::isfinite(f0) || !std::isfinite(g) || !df0.allFinite() || !dg.allFinite()) {
    throw Error("MMA received non-finite objective/constraint data");
  }

  ++iter_;
  if (iter_ <= 2) {
    low_ = x - opt_.asymptote_init * range_;
    upp_ = x + opt_.asymptote_init * range_;
  } else {
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double trend = (x[j] - xold1_[j]) * (xold1_[j] - xold2_[j]);
      double factor = 1.0;
      if (trend > 0.0) factor = opt_.asymptote_incr;
      if (trend < 0.0) factor = opt_.asymptote_decr;
      low_[j] = x[j] - factor * (xold1_[j] - low_[j]);
      upp_[j] = x[j] + factor * (upp_[j] - xold1_[j]);
      low_[j] = std::max(low_[j], x[j] - 10.0 * range_[j]);
      low_[j] = std::min(low_[j], x[j] - 0.01 * range_[j]);
      upp_[j] = std::min(upp_[j], x[j] + 10.0 * range_[j]);
      upp_[j] = std::max(upp_[j], x[j] + 0.01 * range_[j]);
    }
  }

  MmaSubproblem& s = sub_;
  s.low = low_;
  s.upp = upp_;
  s.alfa.resize(n_);
  s.beta.resize(n_);
  s.p0.resize(n_);
  s.q0.resize(n_);
  s.p1.resize(n_);
  s.q1.resize(n_);
  double r1 = g;  // constraint approximation constant
  for (Eigen::Index j = 0; j < n_; ++j) {
    s.alfa[j] = std::max({xmin_[j], low_[j] + 0.1 * (x[j] - low_[j]),
                          x[j] - opt_.move_limit * range_[j]});
    s.beta[j] = std::min({xmax_[j], upp_[j] - 0.1 * (upp_[j] - x[j]),
                          x[j] + opt_.move_limit * range_[j]});
    if (s.beta[j] < s.alfa[j]) s.beta[j] = s.alfa[j];

    const double ux = upp_[j] - x[j];
    const double xl = x[j] - low_[j];
    const double ux2 = ux * ux;
    const double xl2 = xl * xl;
    const double xmami = std::max(range_[j], 1e-5);

    const double df_pos = std::max(df0[j], 0.0);
    const double df_neg = std::max(-df0[j], 0.0);
    const double mix0 = 0.001 * (df_pos + df_neg) + opt_.raa0 / xmami;
    s.p0[j] = ux2 * (df_pos + mix0);
    s.q0[j] = xl2 * (df_neg + mix0);

    const double dg_pos = std::max(dg[j], 0.0);
    const double dg_neg = std::max(-dg[j], 0.0);
    const double mix1 = 0.001 * (dg_pos + dg_neg) + opt_.raa0 / xmami;
    s.p1[j] = ux2 * (dg_pos + mix1);
    s.q1[j] = xl2 * (dg_neg + mix1);

    r1 -= s.p1[j] / ux + s.q1[j] / xl;
  }
  s.b = -r1;

  // Dual solve: the constraint gap minus the relaxation y(lambda) is
  // non-increasing in lambda, so bracket and bisect.
  VectorXd xnew(n_);
  const double c = opt_.constraint_penalty;
  auto dual_gradient = [&](double lambda) {
    primal_of_lambda(s, lambda, xnew);
    const double y = std::max(0.0, lambda - c);
    return constraint_gap(s, xnew) - y;
  };

  double lambda = 0.0;
  if (dual_gradient(0.0) > 0.0) {
    double lo = 0.0, hi = 1.0;
    while (dual_gradient(hi) > 0.0 && hi < 1e12) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      lambda = 0.5 * (lo + hi);
      if (dual_gradient(lambda) > 0.0) {
        lo = lambda;
      } else {
        hi = lambda;
      }
      if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    lambda = hi;  // feasible side
  }
  primal_of_lambda(s, lambda, xnew);
  s.lambda = lambda;
  s.y = std::max(0.0, lambda - c);

  xold2_ = (iter_ >= 2) ? xold1_ : x;
  xold1_ = x;
  (void)f0;
  return xnew;
}

}  // namespace get
