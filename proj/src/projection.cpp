#include "get/projection.hpp"

namespace get {

double heaviside(double phi, const ProjectionParams& p) {
  const double t = phi - p.threshold;
  if (p.epsilon == 0.0) return t >= 0.0 ? 1.0 : p.alpha_floor;
  if (t > p.epsilon) return 1.0;
  if (t < -p.epsilon) return p.alpha_floor;
  const double s = t / p.epsilon;
  return 0.75 * (1.0 - p.alpha_floor) * (s - s * s * s / 3.0) + 0.5 * (1.0 + p.alpha_floor);
}

double heaviside_derivative(double phi, const ProjectionParams& p) {
  if (!(p.epsilon > 0.0)) {
    throw DefinitionError("heaviside derivative undefined at epsilon = 0");
  }
  const double t = phi - p.threshold;
  if (t > p.epsilon || t < -p.epsilon) return 0.0;
  const double s = t / p.epsilon;
  return 0.75 * (1.0 - p.alpha_floor) / p.epsilon * (1.0 - s * s);
}

double element_density(std::span<const double> nodal_tdf, const ProjectionParams& p) {
  if (nodal_tdf.size() != 4 && nodal_tdf.size() != 8) {
    throw ShapeError("element has 4 (Q4) or 8 (Hex8) nodes, got " +
                     std::to_string(nodal_tdf.size()));
  }
  double sum = 0.0;
  for (double phi : nodal_tdf) sum += heaviside(phi, p);
  return sum / static_cast<double>(nodal_tdf.size());
}

double measure_nondiscreteness(std::span<const double> densities) {
  if (densities.empty()) return 0.0;
  double sum = 0.0;
  for (double rho : densities) {
    const double r = rho < 0.005 ? 0.0 : rho;
    sum += 4.0 * r * (1.0 - r);
  }
  return sum / static_cast<double>(densities.size()) * 100.0;
}

}  // namespace get
