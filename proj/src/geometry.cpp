#include "get/geometry.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace get {

int worker_count() {
  static const int cached = [] {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("GET_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1 && cap < n) n = cap;
    }
    return n;
  }();
  return cached;
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
  const std::int64_t count = end - begin;
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(), count));
  if (workers <= 1) {
    body(begin, end);
    return;
  }
  const std::int64_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = begin + w * chunk;
    const std::int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

template <>
Mat<2> rotation<2>(const Vec<1>& angles) {
  const double c = std::cos(angles[0]);
  const double s = std::sin(angles[0]);
  Mat<2> r;
  r << c, -s, s, c;
  return r;
}

template <>
Mat<3> rotation<3>(const Vec<3>& angles) {
  const double ca = std::cos(angles[0]), sa = std::sin(angles[0]);
  const double cb = std::cos(angles[1]), sb = std::sin(angles[1]);
  const double cg = std::cos(angles[2]), sg = std::sin(angles[2]);
  Mat<3> r;
  r << cb * cg, cb * sg, -sb,                                      //
      sa * sb * cg - ca * sg, sa * sb * sg + ca * cg, sa * cb,     //
      ca * sb * cg + sa * sg, ca * sb * sg - sa * cg, ca * cb;
  return r;
}

template <>
Mat<2> rotation_derivative<2>(const Vec<1>& angles, int which) {
  if (which != 0) throw ShapeError("2D rotation has a single angle");
  const double c = std::cos(angles[0]);
  const double s = std::sin(angles[0]);
  Mat<2> r;
  r << -s, -c, c, -s;
  return r;
}

template <>
Mat<3> rotation_derivative<3>(const Vec<3>& angles, int which) {
  const double ca = std::cos(angles[0]), sa = std::sin(angles[0]);
  const double cb = std::cos(angles[1]), sb = std::sin(angles[1]);
  const double cg = std::cos(angles[2]), sg = std::sin(angles[2]);
  Mat<3> r;
  switch (which) {
    case 0:  // alpha
      r << 0, 0, 0,                                                 //
          ca * sb * cg + sa * sg, ca * sb * sg - sa * cg, ca * cb,  //
          -sa * sb * cg + ca * sg, -sa * sb * sg - ca * cg, -sa * cb;
      return r;
    case 1:  // beta
      r << -sb * cg, -sb * sg, -cb,                   //
          sa * cb * cg, sa * cb * sg, -sa * sb,       //
          ca * cb * cg, ca * cb * sg, -ca * sb;
      return r;
    case 2:  // gamma
      r << -cb * sg, cb * cg, 0,                                      //
          -sa * sb * sg - ca * cg, sa * sb * cg - ca * sg, 0,         //
          -ca * sb * sg + sa * cg, ca * sb * cg + sa * sg, 0;
      return r;
    default:
      throw ShapeError("3D rotation has three angles");
  }
}

namespace {

template <int D>
void check_sigma(const GaussianField<D>& field) {
  for (int k = 0; k < D; ++k) {
    if (!(field.sigma[k] > 0.0)) {
      throw InvalidFieldError("field sigma must be strictly positive");
    }
  }
}

template <int D>
Mat<D> inv_scale_sq(const Vec<D>& sigma) {
  Mat<D> s = Mat<D>::Zero();
  for (int k = 0; k < D; ++k) s(k, k) = 1.0 / (sigma[k] * sigma[k]);
  return s;
}

}  // namespace

template <int D>
Mat<D> covariance_inverse(const GaussianField<D>& field) {
  check_sigma(field);
  const Mat<D> r = rotation<D>(field.angles);
  return r * inv_scale_sq<D>(field.sigma) * r.transpose();
}

template <int D>
double eval_field(const GaussianField<D>& field, const Vec<D>& x) {
  const Mat<D> si = covariance_inverse(field);
  const Vec<D> d = x - field.mu;
  return std::exp(-0.5 * d.dot(si * d));
}

template <int D>
double eval_tdf(const Ensemble<D>& ensemble, const Vec<D>& x) {
  double phi = 0.0;
  for (const auto& field : ensemble) {
    if (field.active) phi += eval_field(field, x);
  }
  return phi;
}

template <int D>
std::vector<double> eval_tdf(const Ensemble<D>& ensemble, const std::vector<Vec<D>>& points) {
  std::vector<double> out(points.size(), 0.0);
  std::vector<FieldKernel<D>> kernels;
  kernels.reserve(ensemble.size());
  for (const auto& field : ensemble) {
    if (field.active) kernels.emplace_back(field);
  }
  for (std::size_t p = 0; p < points.size(); ++p) {
    double phi = 0.0;
    for (const auto& k : kernels) phi += k.eval(points[p]);
    out[p] = phi;
  }
  return out;
}

template <int D>
FieldKernel<D>::FieldKernel(const GaussianField<D>& field)
    : mu(field.mu), sigma_inv(covariance_inverse(field)) {
  // Box half-width along axis k is 6*sqrt(Sigma_kk).
  const Mat<D> r = rotation<D>(field.angles);
  Mat<D> s2 = Mat<D>::Zero();
  for (int k = 0; k < D; ++k) s2(k, k) = field.sigma[k] * field.sigma[k];
  const Mat<D> cov = r * s2 * r.transpose();
  for (int k = 0; k < D; ++k) box_halfwidth[k] = 6.0 * std::sqrt(cov(k, k));
}

template <int D>
GradKernel<D>::GradKernel(const GaussianField<D>& field) : mu(field.mu) {
  check_sigma(field);
  rot = rotation<D>(field.angles);
  const Mat<D> s_inv2 = inv_scale_sq<D>(field.sigma);
  for (int k = 0; k < D; ++k) inv_sigma[k] = 1.0 / field.sigma[k];
  sigma_inv = rot * s_inv2 * rot.transpose();
  for (int a = 0; a < kAnglesPerField<D>; ++a) {
    const Mat<D> dr = rotation_derivative<D>(field.angles, a);
    const Mat<D> m = dr * s_inv2 * rot.transpose();
    angle_term[a] = m + m.transpose();
  }
}

template <int D>
Vec<kParamsPerField<D>> GradKernel<D>::grad(const Vec<D>& x) const {
  const Vec<D> d = x - mu;
  const Vec<D> sid = sigma_inv * d;
  const double phi = std::exp(-0.5 * d.dot(sid));
  Vec<kParamsPerField<D>> g;
  // mean: d(phi)/d(mu_j) = phi * e_j^T Sigma^{-1} d
  for (int j = 0; j < D; ++j) g[j] = phi * sid[j];
  // scale: -1/2 phi d^T R dS^{-2}/ds_k R^T d = phi (R^T d)_k^2 / s_k^3
  const Vec<D> rtd = rot.transpose() * d;
  for (int k = 0; k < D; ++k) {
    const double w = rtd[k] * inv_sigma[k];
    g[D + k] = phi * w * w * inv_sigma[k];
  }
  // angles: -1/2 phi d^T (dR/da S^-2 R^T + R S^-2 dR^T/da) d
  for (int a = 0; a < kAnglesPerField<D>; ++a) {
    g[2 * D + a] = -0.5 * phi * d.dot(angle_term[a] * d);
  }
  return g;
}

template <int D>
Vec<kParamsPerField<D>> grad_field_params(const GaussianField<D>& field, const Vec<D>& x) {
  return GradKernel<D>(field).grad(x);
}

template <int D>
int deactivate_degenerate(Ensemble<D>& ensemble, double element_edge_length) {
  if (!(element_edge_length > 0.0)) throw DefinitionError("element edge length must be positive");
  const double threshold = 0.5 * element_edge_length;
  int count = 0;
  for (auto& field : ensemble) {
    if (field.active && field.sigma.minCoeff() < threshold) {
      field.active = false;
      ++count;
    }
  }
  return count;
}

template <int D>
VectorXd pack(const Ensemble<D>& ensemble) {
  constexpr int P = kParamsPerField<D>;
  VectorXd out(P * static_cast<Eigen::Index>(ensemble.size()));
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto& f = ensemble[i];
    Eigen::Index at = static_cast<Eigen::Index>(P * i);
    out.segment<D>(at) = f.mu;
    out.segment<D>(at + D) = f.sigma;
    out.segment<kAnglesPerField<D>>(at + 2 * D) = f.angles;
  }
  return out;
}

template <int D>
void unpack(const VectorXd& design, Ensemble<D>& ensemble) {
  constexpr int P = kParamsPerField<D>;
  if (design.size() != static_cast<Eigen::Index>(P * ensemble.size())) {
    throw ShapeError("design vector length " + std::to_string(design.size()) +
                     " does not match " + std::to_string(ensemble.size()) + " fields x " +
                     std::to_string(P));
  }
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    auto& f = ensemble[i];
    Eigen::Index at = static_cast<Eigen::Index>(P * i);
    f.mu = design.segment<D>(at);
    f.sigma = design.segment<D>(at + D);
    f.angles = design.segment<kAnglesPerField<D>>(at + 2 * D);
  }
}

template Mat<2> covariance_inverse<2>(const GaussianField<2>&);
template Mat<3> covariance_inverse<3>(const GaussianField<3>&);
template double eval_field<2>(const GaussianField<2>&, const Vec<2>&);
template double eval_field<3>(const GaussianField<3>&, const Vec<3>&);
template double eval_tdf<2>(const Ensemble<2>&, const Vec<2>&);
template double eval_tdf<3>(const Ensemble<3>&, const Vec<3>&);
template std::vector<double> eval_tdf<2>(const Ensemble<2>&, const std::vector<Vec<2>>&);
template std::vector<double> eval_tdf<3>(const Ensemble<3>&, const std::vector<Vec<3>>&);
template Vec<5> grad_field_params<2>(const GaussianField<2>&, const Vec<2>&);
template Vec<9> grad_field_params<3>(const GaussianField<3>&, const Vec<3>&);
template struct FieldKernel<2>;
template struct FieldKernel<3>;
template struct GradKernel<2>;
template struct GradKernel<3>;
template int deactivate_degenerate<2>(Ensemble<2>&, double);
template int deactivate_degenerate<3>(Ensemble<3>&, double);
template VectorXd pack<2>(const Ensemble<2>&);
template VectorXd pack<3>(const Ensemble<3>&);
template void unpack<2>(const VectorXd&, Ensemble<2>&);
template void unpack<3>(const VectorXd&, Ensemble<3>&);

}  // namespace get
