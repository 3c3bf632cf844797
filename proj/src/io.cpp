#include "get/io.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace get {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw DefinitionError("cannot write to " + path.string());
  return out;
}

}  // namespace

template <int D>
std::string problem_hash(const ProblemDefinition<D>& def) {
  std::ostringstream id;
  id << std::setprecision(17) << def.name << '|' << D << '|';
  for (int k = 0; k < D; ++k) id << def.domain.lo[k] << ',' << def.domain.hi[k] << ';';
  id << static_cast<int>(def.objective) << '|' << def.volume_bound;
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a(id.str());
  return hex.str();
}

namespace {

template <int D>
json ensemble_to_json(const Ensemble<D>& ensemble) {
  json fields = json::array();
  for (const auto& f : ensemble) {
    json jf;
    jf["mu"] = std::vector<double>(f.mu.data(), f.mu.data() + D);
    jf["sigma"] = std::vector<double>(f.sigma.data(), f.sigma.data() + D);
    jf["angles"] =
        std::vector<double>(f.angles.data(), f.angles.data() + kAnglesPerField<D>);
    jf["active"] = f.active;
    fields.push_back(std::move(jf));
  }
  return fields;
}

template <int D>
Ensemble<D> ensemble_from_json(const json& fields) {
  Ensemble<D> ensemble;
  for (const auto& jf : fields) {
    GaussianField<D> f;
    const auto mu = jf.at("mu").get<std::vector<double>>();
    const auto sigma = jf.at("sigma").get<std::vector<double>>();
    const auto angles = jf.at("angles").get<std::vector<double>>();
    if (mu.size() != D || sigma.size() != D || angles.size() != kAnglesPerField<D>) {
      throw DefinitionError("design field has wrong parameter counts");
    }
    for (int k = 0; k < D; ++k) {
      f.mu[k] = mu[k];
      f.sigma[k] = sigma[k];
    }
    for (int a = 0; a < kAnglesPerField<D>; ++a) f.angles[a] = angles[a];
    f.active = jf.at("active").get<bool>();
    ensemble.push_back(f);
  }
  return ensemble;
}

}  // namespace

template <int D>
void save_design(const std::filesystem::path& path, const std::string& benchmark,
                 const ProblemDefinition<D>& def, const Ensemble<D>& ensemble,
                 const ProjectionParams& proj) {
  json doc;
  doc["format"] = "get-design/1";
  doc["dim"] = D;
  doc["benchmark"] = benchmark;
  doc["problem_hash"] = problem_hash(def);
  doc["projection"] = {{"threshold", proj.threshold},
                       {"epsilon", proj.epsilon},
                       {"alpha_floor", proj.alpha_floor}};
  doc["fields"] = ensemble_to_json<D>(ensemble);
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

LoadedDesign load_design(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DefinitionError("cannot read design file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw DefinitionError("design file " + path.string() + ": " + err.what());
  }
  try {
    LoadedDesign d;
    if (doc.at("format").get<std::string>() != "get-design/1") {
      throw DefinitionError("unsupported design format");
    }
    d.dim = doc.at("dim").get<int>();
    d.benchmark = doc.at("benchmark").get<std::string>();
    d.problem_hash = doc.at("problem_hash").get<std::string>();
    const auto& pj = doc.at("projection");
    d.projection.threshold = pj.at("threshold").get<double>();
    d.projection.epsilon = pj.at("epsilon").get<double>();
    d.projection.alpha_floor = pj.at("alpha_floor").get<double>();
    if (d.dim == 2) {
      d.ensemble2 = ensemble_from_json<2>(doc.at("fields"));
    } else if (d.dim == 3) {
      d.ensemble3 = ensemble_from_json<3>(doc.at("fields"));
    } else {
      throw DefinitionError("design dim must be 2 or 3");
    }
    return d;
  } catch (const json::exception& err) {
    throw DefinitionError("design file " + path.string() + ": " + err.what());
  }
}

void write_history_csv(const std::filesystem::path& path, const ConvergenceHistory& history) {
  auto out = open_out(path);
  out << "iteration,objective,volume_fraction,active_fields,time_tdf,time_sen,time_fea,time_mma\n";
  out << std::setprecision(17);
  for (const auto& r : history.records) {
    out << r.iteration << ',' << r.objective << ',' << r.volume_fraction << ','
        << r.active_fields << ',' << r.time_tdf << ',' << r.time_sen << ',' << r.time_fea << ','
        << r.time_mma << '\n';
  }
}

template <int D>
void write_cell_field_vtk(const std::filesystem::path& path, const StructuredMesh<D>& mesh,
                          const std::vector<double>& cell_values,
                          const std::string& field_name) {
  if (static_cast<int>(cell_values.size()) != mesh.num_elements()) {
    throw ShapeError("cell field length does not match mesh");
  }
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\n" << field_name << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  const auto nd = mesh.node_dims();
  out << "DIMENSIONS " << nd[0] << ' ' << nd[1] << ' ' << (D == 3 ? nd[2] : 1) << '\n';
  out << "ORIGIN " << mesh.origin[0] << ' ' << mesh.origin[1] << ' '
      << (D == 3 ? mesh.origin[2] : 0.0) << '\n';
  out << "SPACING " << mesh.h << ' ' << mesh.h << ' ' << mesh.h << '\n';
  out << "CELL_DATA " << mesh.num_elements() << '\n';
  out << "SCALARS " << field_name << " double 1\nLOOKUP_TABLE default\n";
  out << std::setprecision(17);
  for (double v : cell_values) out << v << '\n';
}

void write_contours_csv(const std::filesystem::path& path,
                        const std::vector<CurvatureProfile>& profiles) {
  auto out = open_out(path);
  out << "contour,point,x,y,curvature\n";
  out << std::setprecision(17);
  for (std::size_t c = 0; c < profiles.size(); ++c) {
    const auto& p = profiles[c];
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      out << c << ',' << i << ',' << p.points[i].x() << ',' << p.points[i].y() << ','
          << p.curvature[i] << '\n';
    }
  }
}

template std::string problem_hash<2>(const ProblemDefinition<2>&);
template std::string problem_hash<3>(const ProblemDefinition<3>&);
template void save_design<2>(const std::filesystem::path&, const std::string&,
                             const ProblemDefinition<2>&, const Ensemble<2>&,
                             const ProjectionParams&);
template void save_design<3>(const std::filesystem::path&, const std::string&,
                             const ProblemDefinition<3>&, const Ensemble<3>&,
                             const ProjectionParams&);
template void write_cell_field_vtk<2>(const std::filesystem::path&, const StructuredMesh<2>&,
                                      const std::vector<double>&, const std::string&);
template void write_cell_field_vtk<3>(const std::filesystem::path&, const StructuredMesh<3>&,
                                      const std::vector<double>&, const std::string&);

}  // namespace get
