#include "get/postprocess.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace get {

namespace {

// Padded-grid marching squares. Edges are keyed by (node i, node j, axis)
// with axis 0 horizontal, 1 vertical, so stitching is exact.
struct EdgeKey {
  int i, j, axis;
  bool operator<(const EdgeKey& o) const {
    return std::tie(i, j, axis) < std::tie(o.i, o.j, o.axis);
  }
};

struct Crossing {
  Eigen::Vector2d point;
  EdgeKey next;  // outgoing connection of the directed contour
};

}  // namespace

std::vector<Contour> extract_contours(const std::vector<double>& grid, int nodes_x, int nodes_y,
                                      const Eigen::Vector2d& origin, double spacing, double level,
                                      const std::function<double(double, double)>& center_value) {
  if (static_cast<int>(grid.size()) != nodes_x * nodes_y) {
    throw ShapeError("grid size does not match node counts");
  }
  // Ghost ring strictly below the level, with coordinates clamped onto the
  // domain boundary so curves close along it.
  const int px = nodes_x + 2, py = nodes_y + 2;
  double low = level;
  for (double v : grid) low = std::min(low, v);
  low -= 1.0;
  std::vector<double> padded(static_cast<std::size_t>(px) * py, low);
  for (int j = 0; j < nodes_y; ++j) {
    for (int i = 0; i < nodes_x; ++i) {
      padded[(j + 1) * static_cast<std::size_t>(px) + (i + 1)] = grid[j * nodes_x + i];
    }
  }
  auto coord = [&](int ip, int jp) {
    const double x = origin.x() + spacing * std::clamp(ip - 1, 0, nodes_x - 1);
    const double y = origin.y() + spacing * std::clamp(jp - 1, 0, nodes_y - 1);
    return Eigen::Vector2d(x, y);
  };
  auto value = [&](int ip, int jp) { return padded[jp * static_cast<std::size_t>(px) + ip]; };
  auto inside = [&](double v) { return v >= level; };

  auto edge_point = [&](const EdgeKey& e) {
    const int i2 = e.axis == 0 ? e.i + 1 : e.i;
    const int j2 = e.axis == 0 ? e.j : e.j + 1;
    const double va = value(e.i, e.j), vb = value(i2, j2);
    const Eigen::Vector2d pa = coord(e.i, e.j), pb = coord(i2, j2);
    const double t = (level - va) / (vb - va);
    return (pa + t * (pb - pa)).eval();
  };

  std::map<EdgeKey, Crossing> segments;  // from-edge -> (point, to-edge)
  for (int j = 0; j + 1 < py; ++j) {
    for (int i = 0; i + 1 < px; ++i) {
      const bool b0 = inside(value(i, j));
      const bool b1 = inside(value(i + 1, j));
      const bool b2 = inside(value(i + 1, j + 1));
      const bool b3 = inside(value(i, j + 1));
      const int c = (b0 ? 1 : 0) | (b1 ? 2 : 0) | (b2 ? 4 : 0) | (b3 ? 8 : 0);
      if (c == 0 || c == 15) continue;
      const EdgeKey e0{i, j, 0}, e1{i + 1, j, 1}, e2{i, j + 1, 0}, e3{i, j, 1};
      auto emit = [&](const EdgeKey& from, const EdgeKey& to) {
        segments[from] = Crossing{edge_point(from), to};
      };
      switch (c) {
        case 1: emit(e0, e3); break;
        case 2: emit(e1, e0); break;
        case 3: emit(e1, e3); break;
        case 4: emit(e2, e1); break;
        case 6: emit(e2, e0); break;
        case 7: emit(e2, e3); break;
        case 8: emit(e3, e2); break;
        case 9: emit(e0, e2); break;
        case 11: emit(e1, e2); break;
        case 12: emit(e3, e1); break;
        case 13: emit(e0, e1); break;
        case 14: emit(e3, e0); break;
        case 5:
        case 10: {
          const Eigen::Vector2d pc = 0.5 * (coord(i, j) + coord(i + 1, j + 1));
          double vc;
          if (center_value) {
            vc = center_value(pc.x(), pc.y());
          } else {
            vc = 0.25 * (value(i, j) + value(i + 1, j) + value(i + 1, j + 1) + value(i, j + 1));
          }
          const bool cin = inside(vc);
          if (c == 5) {
            if (cin) {
              emit(e0, e1);
              emit(e2, e3);
            } else {
              emit(e0, e3);
              emit(e2, e1);
            }
          } else {
            if (cin) {
              emit(e3, e0);
              emit(e1, e2);
            } else {
              emit(e1, e0);
              emit(e3, e2);
            }
          }
          break;
        }
        default: break;
      }
    }
  }

  std::vector<Contour> contours;
  std::map<EdgeKey, bool> visited;
  for (const auto& [start, first] : segments) {
    if (visited[start]) continue;
    Contour contour;
    contour.level = level;
    EdgeKey at = start;
    while (true) {
      const auto it = segments.find(at);
      if (it == segments.end()) break;  // should not happen on a padded grid
      visited[at] = true;
      const Eigen::Vector2d p = it->second.point;
      if (contour.points.empty() || (contour.points.back() - p).norm() > 0.0) {
        contour.points.push_back(p);
      }
      at = it->second.next;
      if (!(at < start) && !(start < at)) break;  // back at the start edge
    }
    if (contour.points.size() >= 3) {
      contour.points.push_back(contour.points.front());
      contours.push_back(std::move(contour));
    }
  }
  return contours;
}

CurvatureProfile contour_curvature(const Contour& contour, int resample_factor) {
  const std::size_t n = contour.points.size();
  if (n < 8) throw ShapeError("contour too coarse for curvature estimation");
  if ((contour.points.front() - contour.points.back()).norm() != 0.0) {
    throw ShapeError("contour must be closed");
  }
  // cumulative arc length over the closed polyline
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    s[i] = s[i - 1] + (contour.points[i] - contour.points[i - 1]).norm();
  }
  const double total = s.back();
  if (!(total > 0.0)) throw ShapeError("contour has zero length");

  const int m = static_cast<int>(n - 1) * resample_factor;
  CurvatureProfile profile;
  profile.points.resize(m);
  profile.curvature.resize(m);
  profile.spacing = total / m;
  std::size_t seg = 0;
  for (int k = 0; k < m; ++k) {
    const double sk = total * k / m;
    while (seg + 1 < n && s[seg + 1] < sk) ++seg;
    const double ds = s[seg + 1] - s[seg];
    const double t = ds > 0.0 ? (sk - s[seg]) / ds : 0.0;
    profile.points[k] = contour.points[seg] + t * (contour.points[seg + 1] - contour.points[seg]);
  }
  const double h = profile.spacing;
  for (int k = 0; k < m; ++k) {
    const Eigen::Vector2d& prev = profile.points[(k + m - 1) % m];
    const Eigen::Vector2d& cur = profile.points[k];
    const Eigen::Vector2d& next = profile.points[(k + 1) % m];
    const Eigen::Vector2d tangent = (next - prev) / (2.0 * h);
    const double tn = tangent.norm();
    if (tn == 0.0) {
      profile.curvature[k] = 0.0;
      continue;
    }
    const Eigen::Vector2d normal(-tangent.y() / tn, tangent.x() / tn);  // left of travel
    const Eigen::Vector2d second = (next - 2.0 * cur + prev) / (h * h);
    profile.curvature[k] = normal.dot(second);
  }
  return profile;
}

double total_turning(const Contour& contour) {
  const std::size_t n = contour.points.size();
  if (n < 4) throw ShapeError("contour too short");
  double turning = 0.0;
  // closed polyline: first == last, so n-1 distinct vertices
  const std::size_t m = n - 1;
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Vector2d a = contour.points[(i + 1) % m] - contour.points[i];
    const Eigen::Vector2d b = contour.points[(i + 2) % m] - contour.points[(i + 1) % m];
    turning += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
  }
  return turning;
}

template <int D>
BinaryExtraction<D> binary_extract(const ResolvedProblem<D>& problem, const Ensemble<D>& ensemble,
                                   const ProjectionParams& proj, FeaSystem<D>& fea) {
  ProjectionParams binary = proj;
  binary.epsilon = 0.0;
  BinaryExtraction<D> out;
  const std::vector<double> tdf = nodal_tdf(ensemble, problem.mesh);
  out.densities = project_densities(tdf, problem.mesh, binary);
  apply_nondesign<D>(out.densities, problem.clamp_kind);
  double max_rho = 0.0;
  for (double r : out.densities) max_rho = std::max(max_rho, r);
  if (max_rho < 0.5) {
    throw NumericalError("binary extraction of a fully void design", 0);
  }
  fea.assemble(out.densities);
  const VectorXd u = fea.solve(problem.force);
  if (problem.objective == ObjectiveKind::mutual_potential_energy) {
    out.objective = problem.output_force.dot(u);
  } else {
    out.objective = compliance(u, problem.force);
  }
  double vol = 0.0;
  for (double r : out.densities) vol += r;
  out.volume_fraction = vol / problem.mesh.num_elements();
  return out;
}

template <int D>
ReevaluationResult<D> reevaluate_on_mesh(const ProblemDefinition<D>& definition,
                                         const Ensemble<D>& ensemble,
                                         const std::array<int, D>& resolution,
                                         const ProjectionParams& proj, SolverKind solver) {
  const ResolvedProblem<D> problem = resolve<D>(definition, resolution);
  FeaSystem<D> fea(problem.mesh, problem.material, problem.dirichlet, problem.springs, solver);
  const DesignEvaluation<D> ev = evaluate_design(problem, ensemble, proj, fea);
  ReevaluationResult<D> out;
  out.objective = ev.objective;
  out.volume_fraction = ev.volume_fraction;
  out.nondiscreteness = measure_nondiscreteness(ev.densities);
  const auto binary = binary_extract(problem, ensemble, proj, fea);
  out.binary_objective = binary.objective;
  out.binary_volume_fraction = binary.volume_fraction;
  return out;
}

template struct BinaryExtraction<2>;
template struct BinaryExtraction<3>;
template BinaryExtraction<2> binary_extract<2>(const ResolvedProblem<2>&, const Ensemble<2>&,
                                               const ProjectionParams&, FeaSystem<2>&);
template BinaryExtraction<3> binary_extract<3>(const ResolvedProblem<3>&, const Ensemble<3>&,
                                               const ProjectionParams&, FeaSystem<3>&);
template ReevaluationResult<2> reevaluate_on_mesh<2>(const ProblemDefinition<2>&,
                                                     const Ensemble<2>&,
                                                     const std::array<int, 2>&,
                                                     const ProjectionParams&, SolverKind);
template ReevaluationResult<3> reevaluate_on_mesh<3>(const ProblemDefinition<3>&,
                                                     const Ensemble<3>&,
                                                     const std::array<int, 3>&,
                                                     const ProjectionParams&, SolverKind);

}  // namespace get
