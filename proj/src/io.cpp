#include "udfm/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace udfm {

std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

Json to_json(const GenerationParams& p) {
  return Json{{"alpha", p.alpha},
              {"r0", p.r0},
              {"ru", p.ru},
              {"kappa", p.kappa},
              {"mean_dir", {p.mean_dir.x(), p.mean_dir.y(), p.mean_dir.z()}},
              {"L", p.L},
              {"buffer", p.buffer},
              {"n_fractures", p.n_fractures},
              {"seed", p.seed},
              {"polygon_vertices", p.polygon_vertices},
              {"count_in_expanded_domain", p.count_in_expanded_domain},
              {"max_attempts", p.max_attempts}};
}

GenerationParams generation_params_from_json(const Json& j) {
  GenerationParams p;
  p.alpha = j.value("alpha", p.alpha);
  p.r0 = j.value("r0", p.r0);
  p.ru = j.value("ru", p.ru);
  p.kappa = j.value("kappa", p.kappa);
  if (j.contains("mean_dir")) {
    const auto& m = j.at("mean_dir");
    if (!m.is_array() || m.size() != 3) throw IoError("mean_dir must be a 3-array");
    p.mean_dir = Vec3(m[0].get<double>(), m[1].get<double>(), m[2].get<double>());
  }
  p.L = j.value("L", p.L);
  p.buffer = j.value("buffer", p.buffer);
  p.n_fractures = j.value("n_fractures", p.n_fractures);
  p.seed = j.value("seed", p.seed);
  p.polygon_vertices = j.value("polygon_vertices", p.polygon_vertices);
  p.count_in_expanded_domain = j.value("count_in_expanded_domain", p.count_in_expanded_domain);
  p.max_attempts = j.value("max_attempts", p.max_attempts);
  return p;
}

std::string network_to_jsonl(const FractureNetwork& network) {
  std::ostringstream os;
  Json header{{"format", "udfm-network"},
              {"version", 1},
              {"params", to_json(network.params)},
              {"seed", network.params.seed},
              {"domain_min", {network.domain.min.x(), network.domain.min.y(), network.domain.min.z()}},
              {"domain_max", {network.domain.max.x(), network.domain.max.y(), network.domain.max.z()}},
              {"count", network.size()}};
  os << header.dump() << '\n';
  for (const auto& f : network.fractures) {
    Json rec{{"id", f.id},
             {"cx", f.center.x()},
             {"cy", f.center.y()},
             {"cz", f.center.z()},
             {"nx", f.normal.x()},
             {"ny", f.normal.y()},
             {"nz", f.normal.z()},
             {"radius", f.radius},
             {"aperture", f.aperture}};
    os << rec.dump() << '\n';
  }
  return os.str();
}

namespace {

Vec3 vec_from(const Json& a) {
  if (!a.is_array() || a.size() != 3) throw IoError("expected a 3-array");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

FractureNetwork network_from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  FractureNetwork net;
  bool have_header = false;
  std::size_t expected = 0;
  try {
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != "udfm-network") throw IoError("missing network header");
        net.params = generation_params_from_json(j.at("params"));
        net.domain = Box{vec_from(j.at("domain_min")), vec_from(j.at("domain_max"))};
        expected = j.at("count").get<std::size_t>();
        have_header = true;
        continue;
      }
      Fracture f;
      f.id = j.at("id").get<int>();
      f.center = Vec3(j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("cz").get<double>());
      f.normal = Vec3(j.at("nx").get<double>(), j.at("ny").get<double>(), j.at("nz").get<double>());
      f.radius = j.at("radius").get<double>();
      f.aperture = j.at("aperture").get<double>();
      net.fractures.push_back(f);
    }
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed network file: ") + e.what());
  }
  if (!have_header) throw IoError("empty network file");
  if (net.fractures.size() != expected) throw IoError("network record count does not match header");
  for (std::size_t i = 0; i < net.fractures.size(); ++i) {
    if (net.fractures[i].id != static_cast<int>(i)) throw IoError("fracture ids are not contiguous");
  }
  return net;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_network(const FractureNetwork& network, const std::filesystem::path& path) {
  write_text(path, network_to_jsonl(network));
}

FractureNetwork read_network(const std::filesystem::path& path) {
  return network_from_jsonl(read_text(path));
}

void write_vtk(std::ostream& os, const OctreeMesh& mesh, std::span<const CellProperties> props,
               std::span<const double> pressure) {
  const auto& cells = mesh.cells();
  const std::size_t n = cells.size();
  if (!props.empty() && props.size() != n) throw IoError("property field size mismatch");
  if (!pressure.empty() && pressure.size() != n) throw IoError("pressure field size mismatch");
  os << "# vtk DataFile Version 3.0\nudfm octree mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << std::setprecision(17);
  os << "POINTS " << 8 * n << " double\n";
  for (const auto& c : cells) {
    const Vec3& lo = c.box.min;
    const Vec3& hi = c.box.max;
    // VTK_HEXAHEDRON ordering: bottom face counter-clockwise, then top face.
    const double xs[8] = {lo.x(), hi.x(), hi.x(), lo.x(), lo.x(), hi.x(), hi.x(), lo.x()};
    const double ys[8] = {lo.y(), lo.y(), hi.y(), hi.y(), lo.y(), lo.y(), hi.y(), hi.y()};
    const double zs[8] = {lo.z(), lo.z(), lo.z(), lo.z(), hi.z(), hi.z(), hi.z(), hi.z()};
    for (int v = 0; v < 8; ++v) os << xs[v] << ' ' << ys[v] << ' ' << zs[v] << '\n';
  }
  os << "CELLS " << n << ' ' << 9 * n << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    os << 8;
    for (std::size_t v = 0; v < 8; ++v) os << ' ' << 8 * i + v;
    os << '\n';
  }
  os << "CELL_TYPES " << n << '\n';
  for (std::size_t i = 0; i < n; ++i) os << "12\n";
  os << "CELL_DATA " << n << '\n';
  os << "SCALARS level int 1\nLOOKUP_TABLE default\n";
  for (const auto& c : cells) os << c.level << '\n';
  os << "SCALARS is_fracture int 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < n; ++i) {
    const bool frac = props.empty() ? cells[i].is_fracture : props[i].is_fracture;
    os << (frac ? 1 : 0) << '\n';
  }
  if (!props.empty()) {
    os << "SCALARS permeability double 1\nLOOKUP_TABLE default\n";
    for (const auto& p : props) os << p.k << '\n';
    os << "SCALARS porosity double 1\nLOOKUP_TABLE default\n";
    for (const auto& p : props) os << p.phi << '\n';
  }
  if (!pressure.empty()) {
    os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (double p : pressure) os << p << '\n';
  }
}

void write_vtk(const std::filesystem::path& path, const OctreeMesh& mesh,
               std::span<const CellProperties> props, std::span<const double> pressure) {
  std::ostringstream os;
  write_vtk(os, mesh, props, pressure);
  write_text(path, os.str());
}

void write_cells_csv(std::ostream& os, const OctreeMesh& mesh) {
  os << "id,level,i,j,k,xmin,ymin,zmin,xmax,ymax,zmax,is_fracture,fracture_ids\n";
  for (const auto& c : mesh.cells()) {
    os << c.id << ',' << c.level << ',' << c.ijk[0] << ',' << c.ijk[1] << ',' << c.ijk[2];
    for (int a = 0; a < 3; ++a) os << ',' << format_double(c.box.min[a]);
    for (int a = 0; a < 3; ++a) os << ',' << format_double(c.box.max[a]);
    os << ',' << (c.is_fracture ? 1 : 0) << ',';
    for (std::size_t i = 0; i < c.fracture_ids.size(); ++i) {
      if (i) os << ';';
      os << c.fracture_ids[i];
    }
    os << '\n';
  }
}

void write_faces_csv(std::ostream& os, const OctreeMesh& mesh) {
  os << "id,cell_a,cell_b,axis,boundary_plane,area,d_a,d_b\n";
  const auto& faces = mesh.faces();
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const Face& f = faces[i];
    os << i << ',' << f.cell_a << ',' << f.cell_b << ',' << f.axis << ',' << static_cast<int>(f.plane)
       << ',' << format_double(f.area) << ',' << format_double(f.d_a) << ',' << format_double(f.d_b)
       << '\n';
  }
}

void write_properties_csv(std::ostream& os, const OctreeMesh& mesh,
                          std::span<const CellProperties> props) {
  if (props.size() != mesh.size()) throw IoError("property field size mismatch");
  os << "id,k,phi,phi_f,n_fractures\n";
  for (std::size_t i = 0; i < props.size(); ++i) {
    os << i << ',' << format_double(props[i].k) << ',' << format_double(props[i].phi) << ','
       << format_double(props[i].phi_f) << ',' << mesh.cells()[i].fracture_ids.size() << '\n';
  }
}

void write_btc_csv(std::ostream& os, const BreakthroughCurve& btc, TracerKind kind,
                   const RunKey& key, bool header) {
  if (header) {
    os << "time_yr,mass_rate_mol_per_yr,cumulative_mol,normalized_time,normalized_rate,"
          "tracer_kind,seed,p_prime,orl,k_m,isolated_mode\n";
  }
  const bool normalized = btc.normalized_time.size() == btc.size();
  for (std::size_t i = 0; i < btc.size(); ++i) {
    os << format_double(btc.times[i]) << ',' << format_double(btc.mass_rate[i]) << ','
       << format_double(btc.cumulative[i]) << ',';
    if (normalized) {
      os << format_double(btc.normalized_time[i]) << ',' << format_double(btc.normalized_rate[i]);
    } else {
      os << ',';
    }
    os << ',' << to_string(kind) << ',' << key.seed << ',' << format_double(key.p_prime) << ','
       << key.orl << ',' << format_double(key.k_m) << ',' << key.isolated_mode << '\n';
  }
}

void write_table2_csv(std::ostream& os, std::span<const Table2Row> rows, bool per_cell_pairs) {
  os << "p_prime,#f,fc,vc,fc/vc[%],vc/n[%],orl,seed,isolated_mode\n";
  for (const auto& r : rows) {
    std::ostringstream pct;
    pct << std::fixed << std::setprecision(2) << r.report.fc_over_vc << ',' << r.report.vc_over_n;
    os << format_double(r.p_prime) << ',' << r.report.reported_false(per_cell_pairs) << ','
       << r.report.cells_with_false << ',' << r.report.total_cells << ',' << pct.str() << ','
       << r.orl << ',' << r.seed << ',' << r.isolated_mode << '\n';
  }
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed");
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(md[i]);
  return os.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

}  // namespace udfm
