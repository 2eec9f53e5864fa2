#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "udfm/flow.hpp"
#include "udfm/io.hpp"
#include "udfm/network.hpp"
#include "udfm/octree.hpp"
#include "udfm/transport.hpp"
#include "udfm/upscaling.hpp"

namespace udfm {

enum class Stage : int { Generate = 1, Mesh = 2, Upscale = 3, Flow = 4, Transport = 5, Report = 6 };

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& s);

/// Process exit code for a failure in `stage`.
inline int exit_code(Stage stage) { return 10 + static_cast<int>(stage); }
inline constexpr int kExitConfigError = 2;

/// Declarative description of an experiment grid.
struct RunConfig {
  GenerationParams generation;
  /// Fracture counts come from p' and the critical count; an empty list uses
  /// generation.n_fractures directly.
  std::vector<double> p_primes{1.0};
  std::optional<CriticalCountPin> pin = CriticalCountPin{};
  MeshParams mesh;
  std::vector<int> orls{1, 2, 3};
  std::vector<double> k_matrix{1e-16};
  double phi_matrix = 0.01;
  bool strict_fracture_porosity = false;
  FlowBC flow;
  SolverOptions solver;
  std::vector<TracerParams> tracers{TracerParams::conservative(), TracerParams::decaying(),
                                     TracerParams::sorbing()};
  OutputSchedule schedule;
  std::vector<std::string> isolated_modes{"retained"};
  std::vector<std::uint64_t> seeds{1};
  bool double_sided_area = false;
  bool per_cell_pairs = false;
  bool write_vtk = false;
  std::string output_dir = "udfm_out";

  /// Desk-scale defaults: L = 25 m, pinned N_c scaled by L^2.
  static RunConfig desk();

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

Json to_json(const RunConfig& config);
RunConfig run_config_from_json(const Json& j);
RunConfig load_config(const std::filesystem::path& path);

/// One (seed, p', mode, orl, k_m) grid point.
struct SummaryRow {
  RunKey key;
  std::int64_t n_fractures = 0;
  std::int64_t n_meshed = 0;
  std::int64_t n_cells = 0;
  std::int64_t n_fracture_cells = 0;
  bool dfn_percolates = false;
  bool mesh_percolates = false;
  std::int64_t false_pairs = 0;
  std::int64_t cells_with_false = 0;
  double fracture_volume = 0.0;
  double k_eff = 0.0;
  double q_in = 0.0;
  double q_out = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double k_harmonic = 0.0;
  double k_arithmetic = 0.0;
  bool within_wiener_bounds = false;
  double error_factor = 0.0;  // vs the finest orl of the same grid point
  std::string status = "ok";
  Stage last_stage = Stage::Generate;
  std::string error;
};

std::string summary_csv(const std::vector<SummaryRow>& rows);

struct PipelineResult {
  std::vector<SummaryRow> rows;
  Json manifest;
  int exit_code = 0;
};

/// Runs the grid through `last` and writes artifacts plus manifest.json into
/// config.output_dir. Failures are recorded per grid point.
PipelineResult run_pipeline(const RunConfig& config, Stage last = Stage::Transport);

/// Writes table1/2/3 as CSV and Markdown next to the manifest; returns the
/// paths written.
std::vector<std::filesystem::path> report_tables(const Json& manifest,
                                                 const std::filesystem::path& out_dir);

/// Percolation verdict classification for the DFN-vs-mesh table.
enum class MatchClass { Match, SpuriousMesh, MissedMesh };
MatchClass classify_percolation(bool dfn, bool mesh);
std::string to_string(MatchClass c);

}  // namespace udfm
