#include "get/mma.hpp"

#include <doctest.h>

#include <random>

using namespace get;

namespace {

// Independent verifier: projected-gradient stationarity of the returned
// iterate on the exposed subproblem, plus dual feasibility/complementarity.
double kkt_residual(const MmaSubproblem& s, const VectorXd& x) {
  double residual = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double ux = s.upp[j] - x[j];
    const double xl = x[j] - s.low[j];
    const double grad = (s.p0[j] + s.lambda * s.p1[j]) / (ux * ux) -
                        (s.q0[j] + s.lambda * s.q1[j]) / (xl * xl);
    const double projected = x[j] - std::clamp(x[j] - grad, s.alfa[j], s.beta[j]);
    residual = std::max(residual, std::abs(projected));
  }
  // primal feasibility and complementary slackness of the single constraint
  double gval = -s.b;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    gval += s.p1[j] / (s.upp[j] - x[j]) + s.q1[j] / (x[j] - s.low[j]);
  }
  const double slack = gval - s.y;
  residual = std::max(residual, std::max(0.0, slack));        // feasibility
  residual = std::max(residual, std::abs(s.lambda * slack));  // complementarity
  return residual;
}

}  // namespace

TEST_CASE("stationary point: zero gradient and satisfied constraint keep x") {
  const int n = 7;
  VectorXd lo = VectorXd::Constant(n, -1.0), hi = VectorXd::Constant(n, 2.0);
  MmaSolver mma(lo, hi);
  VectorXd x = VectorXd::Constant(n, 0.4);
  const VectorXd zero = VectorXd::Zero(n);
  const VectorXd next = mma.update(x, 1.0, zero, -0.1, zero);
  CHECK((next - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("monotone single-variable subproblem moves toward the bound by <= move limit") {
  VectorXd lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;
  MmaOptions opt;
  MmaSolver mma(lo, hi, opt);
  VectorXd x(1), df0(1), dg(1);
  x << 0.5;
  df0 << -1.0;  // objective decreases with x
  dg << 0.0;
  const VectorXd next = mma.update(x, 1.0, df0, -0.5, dg);
  CHECK(next[0] > x[0]);
  CHECK(next[0] <= x[0] + opt.move_limit * (hi[0] - lo[0]) + 1e-12);
}

TEST_CASE("iterates always stay within bounds and asymptotes bracket them") {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 20;
  VectorXd lo = VectorXd::Constant(n, -2.0), hi = VectorXd::Constant(n, 3.0);
  MmaSolver mma(lo, hi);
  VectorXd x = VectorXd::Constant(n, 0.5);
  for (int iter = 0; iter < 25; ++iter) {
    VectorXd df0(n), dg(n);
    for (int j = 0; j < n; ++j) {
      df0[j] = u(rng);
      dg[j] = u(rng);
    }
    const double g = u(rng);
    x = mma.update(x, 1.0, df0, g, dg);
    const auto& s = mma.last_subproblem();
    for (int j = 0; j < n; ++j) {
      CHECK(x[j] >= lo[j] - 1e-14);
      CHECK(x[j] <= hi[j] + 1e-14);
      CHECK(s.low[j] < x[j]);
      CHECK(s.upp[j] > x[j]);
    }
  }
}

TEST_CASE("subproblem KKT residual < 1e-9 on random 50-variable instances") {
  std::mt19937 rng(577);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> spread(0.5, 4.0);
  for (int instance = 0; instance < 20; ++instance) {
    const int n = 50;
    VectorXd lo(n), hi(n), x(n), df0(n), dg(n);
    for (int j = 0; j < n; ++j) {
      lo[j] = -spread(rng);
      hi[j] = spread(rng);
      const double t = 0.5 * (u(rng) + 1.0);
      x[j] = lo[j] + t * (hi[j] - lo[j]);
      df0[j] = 10.0 * u(rng);
      dg[j] = u(rng);
    }
    MmaSolver mma(lo, hi);
    // a few iterations so asymptote adaptation is exercised too
    VectorXd xi = x;
    for (int it = 0; it < 3; ++it) {
      xi = mma.update(xi, 1.0, df0, u(rng), dg);
      CHECK(kkt_residual(mma.last_subproblem(), xi) < 1e-9);
    }
  }
}

TEST_CASE("violated constraint pushes the linearized constraint down") {
  const int n = 10;
  VectorXd lo = VectorXd::Constant(n, 0.0), hi = VectorXd::Constant(n, 1.0);
  MmaSolver mma(lo, hi);
  VectorXd x = VectorXd::Constant(n, 0.8);
  const VectorXd df0 = VectorXd::Constant(n, -1.0);  // wants to grow x
  const VectorXd dg = VectorXd::Constant(n, 1.0);    // constraint grows with x
  const double g = 0.3;                              // currently violated
  const VectorXd next = mma.update(x, 1.0, df0, g, dg);
  double predicted = g;
  for (int j = 0; j < n; ++j) predicted += dg[j] * (next[j] - x[j]);
  CHECK(predicted < g);
}

TEST_CASE("non-finite input is rejected") {
  VectorXd lo(2), hi(2);
  lo << 0, 0;
  hi << 1, 1;
  MmaSolver mma(lo, hi);
  VectorXd x(2), df0(2), dg(2);
  x << 0.5, 0.5;
  df0 << 1.0, std::numeric_limits<double>::quiet_NaN();
  dg << 0.0, 0.0;
  CHECK_THROWS_AS(mma.update(x, 1.0, df0, 0.0, dg), Error);
}

TEST_CASE("asymptote adaptation: oscillation tightens, monotone widens") {
  VectorXd lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;
  MmaSolver mma(lo, hi);
  VectorXd dg = VectorXd::Zero(1);
  VectorXd df(1);

  // monotone descent for a few iterations widens the asymptote span
  VectorXd x(1);
  x << 0.2;
  df << -1.0;
  x = mma.update(x, 1.0, df, -0.5, dg);
  const double span1 = mma.last_subproblem().upp[0] - mma.last_subproblem().low[0];
  x = mma.update(x, 1.0, df, -0.5, dg);
  x = mma.update(x, 1.0, df, -0.5, dg);
  const double span_monotone = mma.last_subproblem().upp[0] - mma.last_subproblem().low[0];
  CHECK(span_monotone > span1);

  // alternating gradient drives oscillation: asymptotes tighten
  MmaSolver mma2(lo, hi);
  x << 0.5;
  double sign = 1.0;
  double span_after = 0.0;
  for (int it = 0; it < 6; ++it) {
    df << sign;
    sign = -sign;
    x = mma2.update(x, 1.0, df, -0.5, dg);
    span_after = mma2.last_subproblem().upp[0] - mma2.last_subproblem().low[0];
  }
  CHECK(span_after < span1);
}
