#pragma once

#include "get/io.hpp"

#include <iosfwd>
#include <optional>

namespace get {

struct ExportToggles {
  bool design = true;
  bool history = true;
  bool density = true;
  bool contours = true;   // includes curvature columns (2D only)
  bool stress = false;
  bool binary = true;
  bool summary = true;
};

/// Validated run configuration: a benchmark name or an inline problem, plus
/// projection/optimizer parameters and export selection. Unknown keys are
/// rejected with a JSON-pointer-style context.
struct RunConfig {
  std::string benchmark;
  std::optional<ProblemDefinition<2>> inline_problem_2d;
  std::optional<ProblemDefinition<3>> inline_problem_3d;
  ProjectionParams projection;
  int max_iters = 200;
  double move_limit = 0.1;
  std::optional<bool> round_sensitivities;
  SolverKind solver = SolverKind::automatic;
  std::optional<std::vector<int>> mesh_override;
  std::optional<std::array<int, 3>> layout_grid;  // [nx, ny(, nz)]
  std::optional<int> layout_fields_per_cell;
  std::filesystem::path output_dir = "runs/out";
  ExportToggles exports;
  std::vector<std::vector<int>> evaluation_meshes;
  unsigned seed = 0;  // reserved; the pipeline is deterministic

  bool is_3d() const;
};

RunConfig parse_config_file(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

struct RunSummary {
  int dim = 2;
  int iterations = 0;
  double objective = 0.0;
  double volume_fraction = 0.0;
  double nondiscreteness = 0.0;
  double binary_objective = 0.0;
  double binary_volume_fraction = 0.0;
  int active_fields = 0;
  double mean_time_tdf = 0.0, mean_time_sen = 0.0, mean_time_fea = 0.0, mean_time_mma = 0.0;
};

/// Full run: optimize, export everything enabled, print the per-stage timing
/// summary to `log`.
RunSummary run_from_config(const RunConfig& config, std::ostream& log);

/// `evaluate` subcommand: re-evaluate a saved design on a mesh resolution.
void evaluate_design_file(const std::filesystem::path& design_path,
                          const std::optional<std::vector<int>>& mesh, std::ostream& log);

/// `post` subcommand: regenerate exports from design.json alone.
void post_from_design(const std::filesystem::path& design_path,
                      const std::filesystem::path& output_dir, const ExportToggles& exports,
                      std::ostream& log);

/// Parameter studies from the discussion section. Each returns its CSV rows
/// and writes them under output_dir when non-empty.
struct StudyCell {
  std::string label;
  double objective = 0.0;
  double volume_fraction = 0.0;
  double binary_objective = 0.0;
  double binary_volume_fraction = 0.0;
  double nondiscreteness = 0.0;
  double mean_time_tdf = 0.0, mean_time_sen = 0.0, mean_time_fea = 0.0, mean_time_mma = 0.0;
};

std::vector<StudyCell> run_gauss_count_study(int iters, const std::filesystem::path& out_dir,
                                             std::ostream& log);
std::vector<StudyCell> run_epsilon_study(int iters, const std::filesystem::path& out_dir,
                                         std::ostream& log);
std::vector<StudyCell> run_threshold_study(int iters, const std::filesystem::path& out_dir,
                                           std::ostream& log);

/// Mesh-independence protocol: optimize on each resolution, cross-evaluate
/// every design on every mesh. cells[i][j] = design i evaluated on mesh j.
struct MeshIndependenceResult {
  std::vector<std::array<int, 2>> meshes;
  std::vector<std::vector<ReevaluationResult<2>>> cells;
  std::vector<StudyCell> runs;  // stage timings per optimization mesh
};
MeshIndependenceResult run_mesh_independence_study(const std::vector<std::array<int, 2>>& meshes,
                                                   const std::vector<int>& iters,
                                                   const std::filesystem::path& out_dir,
                                                   std::ostream& log);

}  // namespace get
