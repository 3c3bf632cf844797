#pragma once

#include "get/common.hpp"

namespace get {

/// One anisotropic Gaussian bump. The intensity at x is
/// exp(-1/2 (x-mu)^T Sigma^{-1} (x-mu)) with Sigma = R S^2 R^T, so the field
/// is 1 at its mean and decays along the rotated principal axes with
/// per-axis standard deviations sigma.
template <int D>
struct GaussianField {
  Vec<D> mu = Vec<D>::Zero();
  Vec<D> sigma = Vec<D>::Ones();
  Vec<kAnglesPerField<D>> angles = Vec<kAnglesPerField<D>>::Zero();
  bool active = true;
};

template <int D>
using Ensemble = std::vector<GaussianField<D>>;

/// Rotation matrix from the field's angle parameters (2D: single angle,
/// 3D: Euler triple (alpha, beta, gamma)).
template <int D>
Mat<D> rotation(const Vec<kAnglesPerField<D>>& angles);

/// d(rotation)/d(angles[which]).
template <int D>
Mat<D> rotation_derivative(const Vec<kAnglesPerField<D>>& angles, int which);

/// Sigma^{-1} = R S^{-2} R^T, assembled from the closed form (never by
/// numeric inversion). Throws InvalidFieldError for non-positive sigma.
template <int D>
Mat<D> covariance_inverse(const GaussianField<D>& field);

/// Intensity of a single field at x, in (0, 1].
template <int D>
double eval_field(const GaussianField<D>& field, const Vec<D>& x);

/// Superposed TDF at a point: sum over active fields only.
template <int D>
double eval_tdf(const Ensemble<D>& ensemble, const Vec<D>& x);

/// Superposed TDF at many points.
template <int D>
std::vector<double> eval_tdf(const Ensemble<D>& ensemble, const std::vector<Vec<D>>& points);

/// Exact gradient of eval_field with respect to the field's own parameters,
/// in design-vector block order (mu..., sigma..., angles...).
template <int D>
Vec<kParamsPerField<D>> grad_field_params(const GaussianField<D>& field, const Vec<D>& x);

/// Per-field evaluation cache: inverse covariance plus the axis-aligned
/// half-widths of the 6-sigma bounding box (contributions outside are
/// below 1.6e-8 and are skipped by the grid kernels).
template <int D>
struct FieldKernel {
  Vec<D> mu;
  Mat<D> sigma_inv;
  Vec<D> box_halfwidth;

  explicit FieldKernel(const GaussianField<D>& field);
  double eval(const Vec<D>& x) const {
    const Vec<D> d = x - mu;
    return std::exp(-0.5 * d.dot(sigma_inv * d));
  }
};

/// Gradient cache: rotation, S^{-2} and the angle derivatives, so band-node
/// loops do not recompute trigonometry per point.
template <int D>
struct GradKernel {
  Vec<D> mu;
  Mat<D> sigma_inv;
  Vec<D> inv_sigma;  // 1/sigma
  Mat<D> rot;
  std::array<Mat<D>, kAnglesPerField<D>> angle_term;  // dR/da S^-2 R^T + R S^-2 dR^T/da

  explicit GradKernel(const GaussianField<D>& field);
  Vec<kParamsPerField<D>> grad(const Vec<D>& x) const;
};

/// Deactivates every active field whose smallest sigma component dropped
/// below half the element edge length. Returns how many were turned off.
/// Deactivation is permanent; inactive fields contribute neither intensity
/// nor sensitivity.
template <int D>
int deactivate_degenerate(Ensemble<D>& ensemble, double element_edge_length);

/// Flat design vector: n blocks of (mu, sigma, angles). Active flags are
/// carried by the ensemble, not by the vector.
template <int D>
VectorXd pack(const Ensemble<D>& ensemble);

/// Inverse of pack; the ensemble supplies field count and active flags.
/// Throws ShapeError on length mismatch.
template <int D>
void unpack(const VectorXd& design, Ensemble<D>& ensemble);

}  // namespace get
