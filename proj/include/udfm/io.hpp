#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "udfm/network.hpp"
#include "udfm/octree.hpp"
#include "udfm/topology.hpp"
#include "udfm/transport.hpp"
#include "udfm/upscaling.hpp"

namespace udfm {

using Json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

Json to_json(const GenerationParams& p);
GenerationParams generation_params_from_json(const Json& j);

// Network files are JSON Lines: a header object, then one record per fracture.
std::string network_to_jsonl(const FractureNetwork& network);
FractureNetwork network_from_jsonl(const std::string& text);
void write_network(const FractureNetwork& network, const std::filesystem::path& path);
FractureNetwork read_network(const std::filesystem::path& path);

/// Legacy VTK unstructured grid of hexahedra. Property and pressure data are optional.
void write_vtk(std::ostream& os, const OctreeMesh& mesh,
               std::span<const CellProperties> props = {},
               std::span<const double> pressure = {});
void write_vtk(const std::filesystem::path& path, const OctreeMesh& mesh,
               std::span<const CellProperties> props = {},
               std::span<const double> pressure = {});

void write_cells_csv(std::ostream& os, const OctreeMesh& mesh);
void write_faces_csv(std::ostream& os, const OctreeMesh& mesh);
void write_properties_csv(std::ostream& os, const OctreeMesh& mesh,
                          std::span<const CellProperties> props);

/// Identifies one grid point of an experiment.
struct RunKey {
  std::uint64_t seed = 0;
  double p_prime = 0.0;
  int orl = 0;
  double k_m = 0.0;
  std::string isolated_mode = "retained";

  bool operator==(const RunKey&) const = default;
};

void write_btc_csv(std::ostream& os, const BreakthroughCurve& btc, TracerKind kind,
                   const RunKey& key, bool header = true);

struct Table2Row {
  double p_prime = 0.0;
  int orl = 0;
  FalseConnectionReport report;
  std::uint64_t seed = 0;
  std::string isolated_mode = "retained";
};

/// Columns: p', #f, fc, vc, fc/vc[%], vc/n[%], then orl, seed, isolated_mode.
void write_table2_csv(std::ostream& os, std::span<const Table2Row> rows, bool per_cell_pairs = false);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace udfm
