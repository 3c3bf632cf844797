#include "get/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::vector<int> parse_dims(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::size_t at = 0;
  while (at < text.size()) {
    std::size_t next = text.find('x', at);
    if (next == std::string::npos) next = text.size();
    try {
      out.push_back(std::stoi(text.substr(at, next - at)));
    } catch (const std::exception&) {
      throw get::DefinitionError(what + ": cannot parse '" + text + "'");
    }
    at = next + 1;
  }
  if (out.empty()) throw get::DefinitionError(what + ": empty value");
  return out;
}

void apply_export_list(const std::string& list, get::ExportToggles& toggles) {
  toggles = {};
  toggles.design = toggles.history = toggles.density = toggles.contours = false;
  toggles.stress = toggles.binary = toggles.summary = false;
  std::size_t at = 0;
  while (at <= list.size()) {
    std::size_t next = list.find(',', at);
    if (next == std::string::npos) next = list.size();
    const std::string name = list.substr(at, next - at);
    if (name == "design") toggles.design = true;
    else if (name == "history") toggles.history = true;
    else if (name == "density") toggles.density = true;
    else if (name == "contours" || name == "curvature") toggles.contours = true;
    else if (name == "stress") toggles.stress = true;
    else if (name == "binary") toggles.binary = true;
    else if (name == "summary") toggles.summary = true;
    else if (!name.empty()) throw get::DefinitionError("unknown export '" + name + "'");
    at = next + 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian ensemble topology optimization"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "optimize a benchmark or configured problem");
  std::string run_benchmark, run_config, run_layout, run_mesh, run_out, run_exports;
  int run_iters = -1;
  double run_epsilon = -1.0, run_threshold = -1.0;
  run->add_option("--benchmark", run_benchmark, "benchmark name");
  run->add_option("--config", run_config, "JSON config file");
  run->add_option("--iters", run_iters, "iteration count");
  run->add_option("--epsilon", run_epsilon, "Heaviside band half-width");
  run->add_option("--threshold", run_threshold, "TDF cut-off threshold");
  run->add_option("--layout", run_layout, "initial layout NXxNY[xNZ]xK (grid + fields per cell)");
  run->add_option("--mesh", run_mesh, "mesh resolution NXxNY[xNZ]");
  run->add_option("--out", run_out, "output directory");
  run->add_option("--export", run_exports, "comma list: design,history,density,contours,stress,binary,summary");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "re-evaluate a saved design.json on a mesh");
  std::string eval_design, eval_mesh;
  evaluate->add_option("design", eval_design, "design.json path")->required();
  evaluate->add_option("--mesh", eval_mesh, "evaluation mesh NXxNY[xNZ]");

  // post
  auto* post = app.add_subcommand("post", "regenerate exports from a design.json");
  std::string post_design, post_out = "runs/post", post_exports;
  post->add_option("design", post_design, "design.json path")->required();
  post->add_option("--out", post_out, "output directory");
  post->add_option("--export", post_exports, "comma list of exports");

  // bench
  auto* bench = app.add_subcommand("bench", "parameter studies from the discussion section");
  std::string bench_study, bench_out = "runs/bench";
  int bench_iters = 200;
  bench->add_option("--study", bench_study,
                    "gauss-count | epsilon | threshold | mesh-independence")
      ->required();
  bench->add_option("--iters", bench_iters, "iterations per run");
  bench->add_option("--out", bench_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      get::RunConfig cfg;
      if (!run_config.empty()) cfg = get::parse_config_file(run_config);
      if (!run_benchmark.empty()) {
        cfg.benchmark = run_benchmark;
        cfg.inline_problem_2d.reset();
        cfg.inline_problem_3d.reset();
      }
      if (run_iters >= 0) cfg.max_iters = run_iters;
      if (run_epsilon >= 0.0) cfg.projection.epsilon = run_epsilon;
      if (run_threshold >= 0.0) cfg.projection.threshold = run_threshold;
      if (!run_mesh.empty()) cfg.mesh_override = parse_dims(run_mesh, "--mesh");
      if (!run_layout.empty()) {
        auto dims = parse_dims(run_layout, "--layout");
        if (dims.size() != 3 && dims.size() != 4) {
          throw get::DefinitionError("--layout: expected NXxNYxK or NXxNYxNZxK");
        }
        cfg.layout_fields_per_cell = dims.back();
        dims.pop_back();
        cfg.layout_grid = {dims[0], dims[1], dims.size() > 2 ? dims[2] : 1};
      }
      if (!run_out.empty()) cfg.output_dir = run_out;
      if (!run_exports.empty()) apply_export_list(run_exports, cfg.exports);
      if (cfg.benchmark.empty() && !cfg.inline_problem_2d && !cfg.inline_problem_3d) {
        throw get::DefinitionError("run needs --benchmark or --config with a problem");
      }
      get::run_from_config(cfg, std::cout);
    } else if (evaluate->parsed()) {
      std::optional<std::vector<int>> mesh;
      if (!eval_mesh.empty()) mesh = parse_dims(eval_mesh, "--mesh");
      get::evaluate_design_file(eval_design, mesh, std::cout);
    } else if (post->parsed()) {
      get::ExportToggles toggles;
      if (!post_exports.empty()) apply_export_list(post_exports, toggles);
      get::post_from_design(post_design, post_out, toggles, std::cout);
    } else if (bench->parsed()) {
      if (bench_study == "gauss-count") {
        get::run_gauss_count_study(bench_iters, bench_out, std::cout);
      } else if (bench_study == "epsilon") {
        get::run_epsilon_study(bench_iters, bench_out, std::cout);
      } else if (bench_study == "threshold") {
        get::run_threshold_study(bench_iters, bench_out, std::cout);
      } else if (bench_study == "mesh-independence") {
        get::run_mesh_independence_study({{100, 50}, {200, 100}, {1000, 500}},
                                         {bench_iters, bench_iters, bench_iters}, bench_out,
                                         std::cout);
      } else {
        throw get::DefinitionError("unknown study '" + bench_study + "'");
      }
    }
  } catch (const get::NumericalError& err) {
    std::cerr << "numerical failure at iteration " << err.iteration << ": " << err.what()
              << "\n";
    return 3;
  } catch (const get::SolverError& err) {
    std::cerr << "solver failure: " << err.what() << "\n";
    return 3;
  } catch (const get::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
