#include "get/runner.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace get {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!obj.is_object()) throw DefinitionError(context + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw DefinitionError(context + ": unknown key '" + key + "'");
    }
  }
}

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

template <int D>
Vec<D> vec_from_json(const json& arr, const std::string& context) {
  if (!arr.is_array() || arr.size() != D) {
    throw DefinitionError(context + ": expected an array of " + std::to_string(D) + " numbers");
  }
  Vec<D> v;
  for (int k = 0; k < D; ++k) v[k] = arr[k].get<double>();
  return v;
}

template <int D>
AxisBox<D> box_from_json(const json& arr, const std::string& context) {
  if (!arr.is_array() || arr.size() != 2) {
    throw DefinitionError(context + ": expected [[lo...],[hi...]]");
  }
  AxisBox<D> box;
  box.lo = vec_from_json<D>(arr[0], context);
  box.hi = vec_from_json<D>(arr[1], context);
  return box;
}

template <int D>
ProblemDefinition<D> problem_from_json(const json& jp) {
  check_keys(jp, {"name", "dim", "domain", "mesh", "objective", "volume_bound", "material",
                  "loads", "output_loads", "supports", "springs", "regions", "symmetry",
                  "reduce_symmetry", "round_sensitivities", "layout"},
             "problem");
  ProblemDefinition<D> p;
  p.name = jp.value("name", std::string("custom"));
  p.domain = box_from_json<D>(jp.at("domain"), "problem.domain");
  const auto mesh = jp.at("mesh").get<std::vector<int>>();
  if (mesh.size() != D) throw DefinitionError("problem.mesh: expected " + std::to_string(D) + " counts");
  for (int k = 0; k < D; ++k) p.mesh_cells[k] = mesh[k];
  const std::string obj = jp.value("objective", std::string("compliance"));
  if (obj == "compliance") {
    p.objective = ObjectiveKind::compliance;
  } else if (obj == "mpe") {
    p.objective = ObjectiveKind::mutual_potential_energy;
  } else {
    throw DefinitionError("problem.objective: must be 'compliance' or 'mpe'");
  }
  p.volume_bound = jp.at("volume_bound").get<double>();
  if (jp.contains("material")) {
    const auto& jm = jp.at("material");
    check_keys(jm, {"youngs", "poisson", "plane_stress"}, "problem.material");
    p.material.youngs = jm.value("youngs", 1.0);
    p.material.poisson = jm.value("poisson", 0.3);
    p.material.plane_stress = jm.value("plane_stress", true);
  }
  auto parse_loads = [&](const char* key, std::vector<LoadSpec<D>>& out) {
    if (!jp.contains(key)) return;
    for (const auto& jl : jp.at(key)) {
      check_keys(jl, {"box", "direction", "scale"}, std::string("problem.") + key);
      LoadSpec<D> load;
      load.where = box_from_json<D>(jl.at("box"), "load.box");
      load.direction = vec_from_json<D>(jl.at("direction"), "load.direction");
      load.scale = jl.value("scale", 1.0);
      out.push_back(load);
    }
  };
  parse_loads("loads", p.loads);
  parse_loads("output_loads", p.output_loads);
  if (jp.contains("supports")) {
    for (const auto& js : jp.at("supports")) {
      check_keys(js, {"box", "fix", "value"}, "problem.supports");
      SupportSpec<D> sup;
      sup.where = box_from_json<D>(js.at("box"), "support.box");
      const auto fix = js.at("fix").get<std::vector<bool>>();
      if (fix.size() != D) throw DefinitionError("support.fix: expected " + std::to_string(D) + " flags");
      for (int k = 0; k < D; ++k) sup.fix[k] = fix[k];
      if (js.contains("value")) {
        const auto val = js.at("value").get<std::vector<double>>();
        if (val.size() != D) throw DefinitionError("support.value: wrong length");
        for (int k = 0; k < D; ++k) sup.value[k] = val[k];
      }
      p.supports.push_back(sup);
    }
  }
  if (jp.contains("springs")) {
    for (const auto& js : jp.at("springs")) {
      check_keys(js, {"at", "axis", "stiffness"}, "problem.springs");
      SpringSpec<D> sp;
      sp.at = vec_from_json<D>(js.at("at"), "spring.at");
      sp.axis = js.at("axis").get<int>();
      sp.stiffness = js.at("stiffness").get<double>();
      if (sp.axis < 0 || sp.axis >= D) throw DefinitionError("spring.axis out of range");
      p.springs.push_back(sp);
    }
  }
  if (jp.contains("regions")) {
    for (const auto& jr : jp.at("regions")) {
      check_keys(jr, {"box", "kind"}, "problem.regions");
      RegionSpec<D> reg;
      reg.box = box_from_json<D>(jr.at("box"), "region.box");
      const std::string kind = jr.at("kind").get<std::string>();
      if (kind == "solid") {
        reg.kind = RegionKind::frozen_solid;
      } else if (kind == "void") {
        reg.kind = RegionKind::frozen_void;
      } else {
        throw DefinitionError("region.kind: must be 'solid' or 'void'");
      }
      p.regions.push_back(reg);
    }
  }
  if (jp.contains("symmetry")) {
    for (const auto& jsym : jp.at("symmetry")) {
      check_keys(jsym, {"axis", "coordinate"}, "problem.symmetry");
      p.symmetry.push_back({jsym.at("axis").get<int>(), jsym.at("coordinate").get<double>()});
    }
  }
  p.reduce_symmetry = jp.value("reduce_symmetry", false);
  p.round_sensitivities = jp.value("round_sensitivities", false);
  if (jp.contains("layout")) {
    const auto& jl = jp.at("layout");
    check_keys(jl, {"blocks", "grid", "fields_per_cell", "pair_angle", "sigma_major_frac",
                    "sigma_minor_frac"},
               "problem.layout");
    if (jl.contains("blocks")) {
      for (const auto& jb : jl.at("blocks")) {
        check_keys(jb, {"region", "grid"}, "layout.blocks");
        LayoutBlock<D> block;
        block.region = box_from_json<D>(jb.at("region"), "layout.block.region");
        const auto grid = jb.at("grid").get<std::vector<int>>();
        if (grid.size() != D) throw DefinitionError("layout.block.grid: wrong length");
        for (int k = 0; k < D; ++k) block.grid[k] = grid[k];
        p.layout.blocks.push_back(block);
      }
    } else if (jl.contains("grid")) {
      const auto grid = jl.at("grid").get<std::vector<int>>();
      if (grid.size() != D) throw DefinitionError("layout.grid: wrong length");
      LayoutBlock<D> block;
      block.region = p.domain;
      for (int k = 0; k < D; ++k) block.grid[k] = grid[k];
      p.layout.blocks.push_back(block);
    }
    p.layout.fields_per_cell = jl.value("fields_per_cell", D == 2 ? 2 : 4);
    p.layout.pair_angle = jl.value("pair_angle", p.layout.pair_angle);
    p.layout.sigma_major_frac = jl.value("sigma_major_frac", p.layout.sigma_major_frac);
    p.layout.sigma_minor_frac = jl.value("sigma_minor_frac", p.layout.sigma_minor_frac);
  }
  if (p.layout.blocks.empty()) {
    LayoutBlock<D> block;
    block.region = p.domain;
    for (int k = 0; k < D; ++k) block.grid[k] = 4;
    p.layout.blocks.push_back(block);
  }
  return p;
}

std::string solver_to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::direct: return "direct";
    case SolverKind::conjugate_gradient: return "cg";
    default: return "auto";
  }
}

SolverKind solver_from_string(const std::string& s) {
  if (s == "auto") return SolverKind::automatic;
  if (s == "direct") return SolverKind::direct;
  if (s == "cg") return SolverKind::conjugate_gradient;
  throw DefinitionError("optimizer.solver: must be auto, direct or cg");
}

}  // namespace

bool RunConfig::is_3d() const {
  if (inline_problem_3d) return true;
  if (inline_problem_2d) return false;
  return benchmark_is_3d(benchmark);
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw DefinitionError(origin + ":" + std::to_string(line_of_offset(text, err.byte)) + ": " +
                          err.what());
  }
  check_keys(doc,
             {"benchmark", "problem", "projection", "optimizer", "mesh", "layout", "output_dir",
              "exports", "evaluation_meshes", "seed"},
             origin);
  RunConfig cfg;
  try {
    if (doc.contains("benchmark")) cfg.benchmark = doc.at("benchmark").get<std::string>();
    if (doc.contains("problem")) {
      const auto& jp = doc.at("problem");
      const int dim = jp.value("dim", 2);
      if (dim == 2) {
        cfg.inline_problem_2d = problem_from_json<2>(jp);
      } else if (dim == 3) {
        cfg.inline_problem_3d = problem_from_json<3>(jp);
      } else {
        throw DefinitionError("problem.dim must be 2 or 3");
      }
    }
    if (cfg.benchmark.empty() && !cfg.inline_problem_2d && !cfg.inline_problem_3d) {
      throw DefinitionError(origin + ": config needs a 'benchmark' or an inline 'problem'");
    }
    if (doc.contains("projection")) {
      const auto& jp = doc.at("projection");
      check_keys(jp, {"threshold", "epsilon", "alpha_floor"}, "projection");
      cfg.projection.threshold = jp.value("threshold", cfg.projection.threshold);
      cfg.projection.epsilon = jp.value("epsilon", cfg.projection.epsilon);
      cfg.projection.alpha_floor = jp.value("alpha_floor", cfg.projection.alpha_floor);
    }
    if (doc.contains("optimizer")) {
      const auto& jo = doc.at("optimizer");
      check_keys(jo, {"max_iters", "move_limit", "round_sensitivities", "solver"}, "optimizer");
      cfg.max_iters = jo.value("max_iters", cfg.max_iters);
      cfg.move_limit = jo.value("move_limit", cfg.move_limit);
      if (jo.contains("round_sensitivities") && !jo.at("round_sensitivities").is_null()) {
        cfg.round_sensitivities = jo.at("round_sensitivities").get<bool>();
      }
      cfg.solver = solver_from_string(jo.value("solver", std::string("auto")));
    }
    if (doc.contains("mesh")) cfg.mesh_override = doc.at("mesh").get<std::vector<int>>();
    if (doc.contains("layout")) {
      const auto& jl = doc.at("layout");
      check_keys(jl, {"grid", "fields_per_cell"}, "layout");
      const auto grid = jl.at("grid").get<std::vector<int>>();
      if (grid.size() < 2 || grid.size() > 3) throw DefinitionError("layout.grid: 2 or 3 counts");
      cfg.layout_grid = {grid[0], grid[1], grid.size() > 2 ? grid[2] : 1};
      if (jl.contains("fields_per_cell")) {
        cfg.layout_fields_per_cell = jl.at("fields_per_cell").get<int>();
      }
    }
    if (doc.contains("output_dir")) {
      cfg.output_dir = doc.at("output_dir").get<std::string>();
    }
    if (doc.contains("exports")) {
      const auto& je = doc.at("exports");
      check_keys(je, {"design", "history", "density", "contours", "stress", "binary", "summary"},
                 "exports");
      cfg.exports.design = je.value("design", cfg.exports.design);
      cfg.exports.history = je.value("history", cfg.exports.history);
      cfg.exports.density = je.value("density", cfg.exports.density);
      cfg.exports.contours = je.value("contours", cfg.exports.contours);
      cfg.exports.stress = je.value("stress", cfg.exports.stress);
      cfg.exports.binary = je.value("binary", cfg.exports.binary);
      cfg.exports.summary = je.value("summary", cfg.exports.summary);
    }
    if (doc.contains("evaluation_meshes")) {
      cfg.evaluation_meshes = doc.at("evaluation_meshes").get<std::vector<std::vector<int>>>();
    }
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<unsigned>();
  } catch (const json::exception& err) {
    throw DefinitionError(origin + ": " + err.what());
  }
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DefinitionError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

namespace {

template <int D>
ProblemDefinition<D> config_definition(const RunConfig& cfg);

template <>
ProblemDefinition<2> config_definition<2>(const RunConfig& cfg) {
  if (cfg.inline_problem_2d) {
    auto def = *cfg.inline_problem_2d;
    if (def.reduce_symmetry) def = symmetry_reduce(def).first;
    return def;
  }
  return build_benchmark_2d(cfg.benchmark);
}

template <>
ProblemDefinition<3> config_definition<3>(const RunConfig& cfg) {
  if (cfg.inline_problem_3d) {
    auto def = *cfg.inline_problem_3d;
    if (def.reduce_symmetry) def = symmetry_reduce(def).first;
    return def;
  }
  return build_benchmark_3d(cfg.benchmark);
}

template <int D>
void apply_overrides(const RunConfig& cfg, ProblemDefinition<D>& def) {
  if (cfg.mesh_override) {
    if (cfg.mesh_override->size() != D) {
      throw DefinitionError("mesh override needs " + std::to_string(D) + " counts");
    }
    for (int k = 0; k < D; ++k) def.mesh_cells[k] = (*cfg.mesh_override)[k];
  }
  if (cfg.layout_grid) {
    LayoutBlock<D> block;
    block.region = def.domain;
    for (int k = 0; k < D; ++k) block.grid[k] = (*cfg.layout_grid)[k];
    def.layout.blocks = {block};
  }
  if (cfg.layout_fields_per_cell) def.layout.fields_per_cell = *cfg.layout_fields_per_cell;
}

OptimizationParams optimization_params(const RunConfig& cfg) {
  OptimizationParams params;
  params.max_iters = cfg.max_iters;
  params.projection = cfg.projection;
  params.mma.move_limit = cfg.move_limit;
  params.round_sensitivities = cfg.round_sensitivities;
  params.solver = cfg.solver;
  return params;
}

struct StageMeans {
  double tdf = 0.0, sen = 0.0, fea = 0.0, mma = 0.0;
};

StageMeans stage_means(const ConvergenceHistory& history) {
  StageMeans m;
  if (history.records.empty()) return m;
  for (const auto& r : history.records) {
    m.tdf += r.time_tdf;
    m.sen += r.time_sen;
    m.fea += r.time_fea;
    m.mma += r.time_mma;
  }
  const double n = static_cast<double>(history.records.size());
  m.tdf /= n;
  m.sen /= n;
  m.fea /= n;
  m.mma /= n;
  return m;
}

void print_timing(const StageMeans& m, std::size_t iterations, std::ostream& log) {
  const double total = m.tdf + m.sen + m.fea + m.mma;
  auto line = [&](const char* name, double t) {
    log << "  " << name << ' ' << std::fixed << std::setprecision(4) << t << " s ("
        << std::setprecision(1) << (total > 0 ? 100.0 * t / total : 0.0) << "%)\n";
  };
  log << "stage timing, mean per iteration over " << iterations << " iterations:\n";
  line("TDF", m.tdf);
  line("SEN", m.sen);
  line("FEA", m.fea);
  line("MMA", m.mma);
  log.unsetf(std::ios::fixed);
  log << std::setprecision(6);
}

template <int D>
RunSummary run_typed(const RunConfig& cfg, std::ostream& log) {
  ProblemDefinition<D> def = config_definition<D>(cfg);
  apply_overrides(cfg, def);
  const ResolvedProblem<D> problem = resolve(def);
  Ensemble<D> initial = generate_layout(def.layout);
  log << def.name << ": " << initial.size() << " fields, "
      << initial.size() * kParamsPerField<D> << " design variables, mesh";
  for (int k = 0; k < D; ++k) log << (k ? "x" : " ") << problem.mesh.cells[k];
  log << "\n";

  const OptimizationParams params = optimization_params(cfg);
  OptimizationResult<D> result = run_optimization(problem, std::move(initial), params);

  const auto& out_dir = cfg.output_dir;
  if (cfg.exports.design) save_design(out_dir / "design.json", cfg.benchmark, def,
                                      result.ensemble, cfg.projection);
  if (cfg.exports.history) write_history_csv(out_dir / "history.csv", result.history);
  if (cfg.exports.density) {
    write_cell_field_vtk(out_dir / "density.vtk", problem.mesh, result.final_eval.densities,
                         "density");
  }
  if (cfg.exports.stress) {
    const auto vm = von_mises_field(result.final_eval.u, result.final_eval.densities,
                                    problem.mesh, problem.material);
    write_cell_field_vtk(out_dir / "stress.vtk", problem.mesh, vm, "von_mises");
  }
  if constexpr (D == 2) {
    if (cfg.exports.contours) {
      const auto nd = problem.mesh.node_dims();
      const Eigen::Vector2d origin(problem.mesh.origin[0], problem.mesh.origin[1]);
      const Ensemble<2>& ens = result.ensemble;
      const auto contours = extract_contours(
          result.final_eval.nodal_tdf, nd[0], nd[1], origin, problem.mesh.h,
          cfg.projection.threshold,
          [&ens](double x, double y) { return eval_tdf(ens, Vec<2>(x, y)); });
      std::vector<CurvatureProfile> profiles;
      for (const auto& c : contours) {
        if (c.points.size() >= 8) profiles.push_back(contour_curvature(c));
      }
      write_contours_csv(out_dir / "contours.csv", profiles);
    }
  }

  RunSummary summary;
  summary.dim = D;
  summary.iterations = static_cast<int>(result.history.records.size());
  summary.objective = result.final_eval.objective;
  summary.volume_fraction = result.final_eval.volume_fraction;
  summary.nondiscreteness = measure_nondiscreteness(result.final_eval.densities);
  summary.active_fields = 0;
  for (const auto& f : result.ensemble) summary.active_fields += f.active ? 1 : 0;
  const StageMeans means = stage_means(result.history);
  summary.mean_time_tdf = means.tdf;
  summary.mean_time_sen = means.sen;
  summary.mean_time_fea = means.fea;
  summary.mean_time_mma = means.mma;

  if (cfg.exports.binary) {
    FeaSystem<D> fea(problem.mesh, problem.material, problem.dirichlet, problem.springs,
                     cfg.solver);
    const auto binary = binary_extract(problem, result.ensemble, cfg.projection, fea);
    summary.binary_objective = binary.objective;
    summary.binary_volume_fraction = binary.volume_fraction;
    if (cfg.exports.density) {
      write_cell_field_vtk(out_dir / "density_binary.vtk", problem.mesh, binary.densities,
                           "density");
    }
  }

  json eval_rows = json::array();
  for (const auto& res : cfg.evaluation_meshes) {
    if (res.size() != D) throw DefinitionError("evaluation mesh needs " + std::to_string(D) + " counts");
    std::array<int, D> cells{};
    for (int k = 0; k < D; ++k) cells[k] = res[k];
    const auto ev = reevaluate_on_mesh<D>(def, result.ensemble, cells, cfg.projection, cfg.solver);
    json row;
    row["mesh"] = res;
    row["objective"] = ev.objective;
    row["volume_fraction"] = ev.volume_fraction;
    row["nondiscreteness"] = ev.nondiscreteness;
    row["binary_objective"] = ev.binary_objective;
    row["binary_volume_fraction"] = ev.binary_volume_fraction;
    eval_rows.push_back(row);
    log << "re-evaluated on mesh";
    for (int k = 0; k < D; ++k) log << (k ? "x" : " ") << res[k];
    log << ": objective " << ev.objective << ", V_f " << ev.volume_fraction << "\n";
  }

  if (cfg.exports.summary) {
    json doc;
    doc["benchmark"] = cfg.benchmark;
    doc["problem"] = def.name;
    doc["dim"] = D;
    doc["iterations"] = summary.iterations;
    doc["objective"] = summary.objective;
    doc["volume_fraction"] = summary.volume_fraction;
    doc["nondiscreteness_percent"] = summary.nondiscreteness;
    doc["active_fields"] = summary.active_fields;
    doc["deactivated_fields"] = result.deactivated_total;
    if (cfg.exports.binary) {
      doc["binary"] = {{"objective", summary.binary_objective},
                       {"volume_fraction", summary.binary_volume_fraction}};
    }
    doc["stage_time_means"] = {{"tdf", means.tdf},
                               {"sen", means.sen},
                               {"fea", means.fea},
                               {"mma", means.mma}};
    if (!eval_rows.empty()) doc["evaluations"] = eval_rows;
    std::ofstream out(out_dir / "summary.json");
    if (!out) throw DefinitionError("cannot write summary.json");
    out << doc.dump(2) << '\n';
  }

  log << "final: objective " << summary.objective << ", V_f " << summary.volume_fraction
      << ", M_nd " << summary.nondiscreteness << "%";
  if (cfg.exports.binary) {
    log << " | binary: objective " << summary.binary_objective << ", V_f "
        << summary.binary_volume_fraction;
  }
  log << "\n";
  print_timing(means, result.history.records.size(), log);
  return summary;
}

}  // namespace

RunSummary run_from_config(const RunConfig& cfg, std::ostream& log) {
  std::filesystem::create_directories(cfg.output_dir);
  if (cfg.is_3d()) return run_typed<3>(cfg, log);
  return run_typed<2>(cfg, log);
}

namespace {

template <int D>
void evaluate_typed(const LoadedDesign& design, const Ensemble<D>& ensemble,
                    const std::optional<std::vector<int>>& mesh, std::ostream& log) {
  ProblemDefinition<D> def = build_benchmark<D>(design.benchmark);
  if (problem_hash(def) != design.problem_hash) {
    throw DefinitionError("design file was produced for a different problem definition");
  }
  std::array<int, D> cells = def.mesh_cells;
  if (mesh) {
    if (mesh->size() != D) throw DefinitionError("mesh needs " + std::to_string(D) + " counts");
    for (int k = 0; k < D; ++k) cells[k] = (*mesh)[k];
  }
  const auto ev = reevaluate_on_mesh<D>(def, ensemble, cells, design.projection);
  log << "mesh";
  for (int k = 0; k < D; ++k) log << (k ? "x" : " ") << cells[k];
  log << ": objective " << ev.objective << ", V_f " << ev.volume_fraction << ", M_nd "
      << ev.nondiscreteness << "%\n";
  log << "binary (epsilon=0): objective " << ev.binary_objective << ", V_f "
      << ev.binary_volume_fraction << "\n";
}

}  // namespace

void evaluate_design_file(const std::filesystem::path& design_path,
                          const std::optional<std::vector<int>>& mesh, std::ostream& log) {
  const LoadedDesign design = load_design(design_path);
  if (design.benchmark.empty()) {
    throw DefinitionError("design file does not name a benchmark to rebuild the problem from");
  }
  if (design.dim == 2) {
    evaluate_typed<2>(design, design.ensemble2, mesh, log);
  } else {
    evaluate_typed<3>(design, design.ensemble3, mesh, log);
  }
}

namespace {

template <int D>
void post_typed(const LoadedDesign& design, const Ensemble<D>& ensemble,
                const std::filesystem::path& out_dir, const ExportToggles& exports,
                std::ostream& log) {
  ProblemDefinition<D> def = build_benchmark<D>(design.benchmark);
  if (problem_hash(def) != design.problem_hash) {
    throw DefinitionError("design file was produced for a different problem definition");
  }
  const ResolvedProblem<D> problem = resolve(def);
  FeaSystem<D> fea(problem.mesh, problem.material, problem.dirichlet, problem.springs);
  const auto ev = evaluate_design(problem, ensemble, design.projection, fea);
  std::filesystem::create_directories(out_dir);
  if (exports.density) {
    write_cell_field_vtk(out_dir / "density.vtk", problem.mesh, ev.densities, "density");
  }
  if (exports.stress) {
    const auto vm = von_mises_field(ev.u, ev.densities, problem.mesh, problem.material);
    write_cell_field_vtk(out_dir / "stress.vtk", problem.mesh, vm, "von_mises");
  }
  if constexpr (D == 2) {
    if (exports.contours) {
      const auto nd = problem.mesh.node_dims();
      const Eigen::Vector2d origin(problem.mesh.origin[0], problem.mesh.origin[1]);
      const auto contours = extract_contours(
          ev.nodal_tdf, nd[0], nd[1], origin, problem.mesh.h, design.projection.threshold,
          [&ensemble](double x, double y) { return eval_tdf(ensemble, Vec<2>(x, y)); });
      std::vector<CurvatureProfile> profiles;
      for (const auto& c : contours) {
        if (c.points.size() >= 8) profiles.push_back(contour_curvature(c));
      }
      write_contours_csv(out_dir / "contours.csv", profiles);
    }
  }
  if (exports.binary) {
    const auto binary = binary_extract(problem, ensemble, design.projection, fea);
    write_cell_field_vtk(out_dir / "density_binary.vtk", problem.mesh, binary.densities,
                         "density");
    log << "binary: objective " << binary.objective << ", V_f " << binary.volume_fraction
        << "\n";
  }
  log << "re-exported " << design.benchmark << " (objective " << ev.objective << ", V_f "
      << ev.volume_fraction << ")\n";
}

}  // namespace

void post_from_design(const std::filesystem::path& design_path,
                      const std::filesystem::path& output_dir, const ExportToggles& exports,
                      std::ostream& log) {
  const LoadedDesign design = load_design(design_path);
  if (design.dim == 2) {
    post_typed<2>(design, design.ensemble2, output_dir, exports, log);
  } else {
    post_typed<3>(design, design.ensemble3, output_dir, exports, log);
  }
}

namespace {

void write_study_csv(const std::filesystem::path& path, const std::vector<StudyCell>& rows) {
  if (path.empty()) return;
  std::ofstream out;
  std::filesystem::create_directories(path.parent_path());
  out.open(path);
  if (!out) throw DefinitionError("cannot write " + path.string());
  out << "label,objective,volume_fraction,binary_objective,binary_volume_fraction,"
         "nondiscreteness,time_tdf,time_sen,time_fea,time_mma\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.label << ',' << r.objective << ',' << r.volume_fraction << ','
        << r.binary_objective << ',' << r.binary_volume_fraction << ',' << r.nondiscreteness
        << ',' << r.mean_time_tdf << ',' << r.mean_time_sen << ',' << r.mean_time_fea << ','
        << r.mean_time_mma << '\n';
  }
}

StudyCell run_cantilever_variant(const std::string& label, const std::array<int, 2>& layout,
                                 const ProjectionParams& proj, int iters,
                                 std::optional<std::array<int, 2>> mesh, std::ostream& log) {
  ProblemDefinition<2> def = build_benchmark_2d("cantilever2d");
  LayoutBlock<2> block;
  block.region = def.domain;
  block.grid = layout;
  def.layout.blocks = {block};
  if (mesh) def.mesh_cells = *mesh;
  const ResolvedProblem<2> problem = resolve(def);
  OptimizationParams params;
  params.max_iters = iters;
  params.projection = proj;
  auto result = run_optimization(problem, generate_layout(def.layout), params);

  StudyCell cell;
  cell.label = label;
  cell.objective = result.final_eval.objective;
  cell.volume_fraction = result.final_eval.volume_fraction;
  cell.nondiscreteness = measure_nondiscreteness(result.final_eval.densities);
  FeaSystem<2> fea(problem.mesh, problem.material, problem.dirichlet, problem.springs);
  const auto binary = binary_extract(problem, result.ensemble, proj, fea);
  cell.binary_objective = binary.objective;
  cell.binary_volume_fraction = binary.volume_fraction;
  const StageMeans means = stage_means(result.history);
  cell.mean_time_tdf = means.tdf;
  cell.mean_time_sen = means.sen;
  cell.mean_time_fea = means.fea;
  cell.mean_time_mma = means.mma;
  log << "  " << label << ": objective " << cell.objective << " (binary "
      << cell.binary_objective << ", V_f " << cell.binary_volume_fraction << ", M_nd "
      << cell.nondiscreteness << "%)\n";
  return cell;
}

}  // namespace

std::vector<StudyCell> run_gauss_count_study(int iters, const std::filesystem::path& out_dir,
                                             std::ostream& log) {
  log << "Gaussian-count study (cantilever2d, " << iters << " iterations per run)\n";
  std::vector<StudyCell> rows;
  for (int n : {1, 2, 4, 6}) {
    rows.push_back(run_cantilever_variant(std::to_string(n) + "x" + std::to_string(n),
                                          {n, n}, ProjectionParams{}, iters, std::nullopt, log));
  }
  if (!out_dir.empty()) write_study_csv(out_dir / "gauss_count.csv", rows);
  return rows;
}

std::vector<StudyCell> run_epsilon_study(int iters, const std::filesystem::path& out_dir,
                                         std::ostream& log) {
  log << "epsilon study (cantilever2d, " << iters << " iterations per run)\n";
  std::vector<StudyCell> rows;
  for (double eps : {0.2, 0.1, 0.02, 0.002}) {
    ProjectionParams proj;
    proj.epsilon = eps;
    std::ostringstream label;
    label << "eps=" << eps;
    rows.push_back(run_cantilever_variant(label.str(), {4, 4}, proj, iters, std::nullopt, log));
  }
  if (!out_dir.empty()) write_study_csv(out_dir / "epsilon.csv", rows);
  return rows;
}

std::vector<StudyCell> run_threshold_study(int iters, const std::filesystem::path& out_dir,
                                           std::ostream& log) {
  log << "threshold study (cantilever2d, " << iters << " iterations per run)\n";
  std::vector<StudyCell> rows;
  for (double t : {0.1, 0.5, 0.9}) {
    ProjectionParams proj;
    proj.threshold = t;
    std::ostringstream label;
    label << "T=" << t;
    rows.push_back(run_cantilever_variant(label.str(), {4, 4}, proj, iters, std::nullopt, log));
  }
  if (!out_dir.empty()) write_study_csv(out_dir / "threshold.csv", rows);
  return rows;
}

MeshIndependenceResult run_mesh_independence_study(const std::vector<std::array<int, 2>>& meshes,
                                                   const std::vector<int>& iters,
                                                   const std::filesystem::path& out_dir,
                                                   std::ostream& log) {
  if (meshes.empty() || iters.size() != meshes.size()) {
    throw DefinitionError("mesh-independence study needs one iteration count per mesh");
  }
  MeshIndependenceResult result;
  result.meshes = meshes;
  ProblemDefinition<2> def = build_benchmark_2d("cantilever2d");
  std::vector<Ensemble<2>> designs;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    std::ostringstream label;
    label << meshes[i][0] << "x" << meshes[i][1];
    log << "optimizing on " << label.str() << " (" << iters[i] << " iterations)\n";
    ProblemDefinition<2> d = def;
    d.mesh_cells = meshes[i];
    const ResolvedProblem<2> problem = resolve(d);
    OptimizationParams params;
    params.max_iters = iters[i];
    auto run = run_optimization(problem, generate_layout(d.layout), params);
    designs.push_back(run.ensemble);
    StudyCell cell;
    cell.label = label.str();
    cell.objective = run.final_eval.objective;
    cell.volume_fraction = run.final_eval.volume_fraction;
    const StageMeans means = stage_means(run.history);
    cell.mean_time_tdf = means.tdf;
    cell.mean_time_sen = means.sen;
    cell.mean_time_fea = means.fea;
    cell.mean_time_mma = means.mma;
    result.runs.push_back(cell);
  }
  for (std::size_t i = 0; i < designs.size(); ++i) {
    result.cells.emplace_back();
    for (std::size_t j = 0; j < meshes.size(); ++j) {
      result.cells[i].push_back(reevaluate_on_mesh<2>(def, designs[i], meshes[j],
                                                   ProjectionParams{}));
      log << "  design " << result.runs[i].label << " on mesh " << result.runs[j].label
          << ": objective " << result.cells[i][j].objective << " (V_f "
          << result.cells[i][j].volume_fraction << ")\n";
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "mesh_independence.csv");
    out << "design_mesh,eval_mesh,objective,volume_fraction,binary_objective,binary_volume_"
           "fraction\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < designs.size(); ++i) {
      for (std::size_t j = 0; j < meshes.size(); ++j) {
        const auto& c = result.cells[i][j];
        out << result.runs[i].label << ',' << result.runs[j].label << ',' << c.objective << ','
            << c.volume_fraction << ',' << c.binary_objective << ','
            << c.binary_volume_fraction << '\n';
      }
    }
  }
  return result;
}

}  // namespace get
