#include "udfm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "udfm/topology.hpp"

namespace udfm {

namespace fs = std::filesystem;

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::Generate: return "generate";
    case Stage::Mesh: return "mesh";
    case Stage::Upscale: return "upscale";
    case Stage::Flow: return "flow";
    case Stage::Transport: return "transport";
    case Stage::Report: return "report";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::Generate, Stage::Mesh, Stage::Upscale, Stage::Flow, Stage::Transport,
                   Stage::Report}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown stage '" + s + "'");
}

RunConfig RunConfig::desk() {
  RunConfig c;
  c.generation.L = 25.0;
  c.orls = {1, 2, 3};
  c.output_dir = "udfm_desk";
  return c;
}

void RunConfig::validate() const {
  GenerationParams g = generation;
  g.n_fractures = std::max<std::int64_t>(g.n_fractures, 0);
  g.validate();
  if (seeds.empty()) throw std::invalid_argument("config needs at least one seed");
  if (orls.empty()) throw std::invalid_argument("config needs at least one orl");
  for (int o : orls) {
    if (o < 0 || o > 10) throw std::invalid_argument("orl out of range");
  }
  if (k_matrix.empty()) throw std::invalid_argument("config needs at least one matrix permeability");
  for (double k : k_matrix) {
    if (!(k > 0.0)) throw std::invalid_argument("matrix permeability must be positive");
  }
  if (!(phi_matrix > 0.0 && phi_matrix < 1.0)) throw std::invalid_argument("phi_matrix must be in (0,1)");
  for (double p : p_primes) {
    if (!(p >= 0.0)) throw std::invalid_argument("p' must be non-negative");
  }
  if (pin && (pin->count < 0 || !(pin->reference_length > 0.0))) {
    throw std::invalid_argument("invalid critical count pin");
  }
  if (!(mesh.l > 0.0)) throw std::invalid_argument("mesh l must be positive");
  const double cells = generation.L / mesh.l;
  if (std::abs(cells - std::round(cells)) > 1e-9 * cells) {
    throw std::invalid_argument("domain edge must be a multiple of mesh l");
  }
  if (!(flow.viscosity > 0.0) || flow.pressure_drop() == 0.0) {
    throw std::invalid_argument("flow needs positive viscosity and nonzero pressure drop");
  }
  for (const auto& t : tracers) t.validate();
  (void)schedule.times_years();
  if (isolated_modes.empty()) throw std::invalid_argument("config needs an isolated mode");
  for (const auto& m : isolated_modes) {
    if (m != "retained" && m != "removed") {
      throw std::invalid_argument("isolated mode must be 'retained' or 'removed'");
    }
  }
}

namespace {

Json to_json(const MeshParams& m) {
  return {{"l", m.l}, {"orl", m.orl}, {"balance_2to1", m.balance_2to1}, {"polygon_vertices", m.polygon_vertices}};
}

Json to_json(const TracerParams& t) {
  return {{"kind", to_string(t.kind)},
          {"diffusion", t.diffusion},
          {"decay", t.decay},
          {"retardation", t.retardation},
          {"injected_mass", t.injected_mass},
          {"cellwise_retardation", t.cellwise_retardation},
          {"distribution_coefficient", t.distribution_coefficient},
          {"saturation", t.saturation},
          {"water_density", t.water_density}};
}

Json to_json(const OutputSchedule& s) {
  Json j{{"t_first_years", s.t_first_years},
         {"t_end_years", s.t_end_years},
         {"per_decade", s.per_decade},
         {"dt_initial_years", s.dt_initial_years},
         {"growth", s.growth}};
  j["dt_max_years"] = std::isfinite(s.dt_max_years) ? Json(s.dt_max_years) : Json(nullptr);
  return j;
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
    }
  }
}

TracerParams tracer_from_json(const Json& j) {
  check_keys(j, {"kind", "half_life_years", "diffusion", "decay", "retardation", "injected_mass",
                 "cellwise_retardation", "distribution_coefficient", "saturation", "water_density"},
             "tracer");
  const TracerKind kind = tracer_kind_from_string(j.at("kind").get<std::string>());
  TracerParams t;
  if (kind == TracerKind::Decaying) t = TracerParams::decaying(j.value("half_life_years", 100.0));
  if (kind == TracerKind::Sorbing) t = TracerParams::sorbing();
  t.diffusion = j.value("diffusion", t.diffusion);
  t.decay = j.value("decay", t.decay);
  t.retardation = j.value("retardation", t.retardation);
  t.injected_mass = j.value("injected_mass", t.injected_mass);
  t.cellwise_retardation = j.value("cellwise_retardation", t.cellwise_retardation);
  t.distribution_coefficient = j.value("distribution_coefficient", t.distribution_coefficient);
  t.saturation = j.value("saturation", t.saturation);
  t.water_density = j.value("water_density", t.water_density);
  return t;
}

}  // namespace

Json to_json(const RunConfig& c) {
  Json tracers = Json::array();
  for (const auto& t : c.tracers) tracers.push_back(to_json(t));
  Json j{{"generation", to_json(c.generation)},
         {"p_primes", c.p_primes},
         {"mesh", to_json(c.mesh)},
         {"orls", c.orls},
         {"k_matrix", c.k_matrix},
         {"phi_matrix", c.phi_matrix},
         {"strict_fracture_porosity", c.strict_fracture_porosity},
         {"flow", {{"p_in", c.flow.p_in}, {"p_out", c.flow.p_out}, {"viscosity", c.flow.viscosity}}},
         {"solver",
          {{"tolerance", c.solver.tolerance},
           {"max_iterations", c.solver.max_iterations},
           {"balance_tolerance", c.solver.balance_tolerance}}},
         {"tracers", tracers},
         {"schedule", to_json(c.schedule)},
         {"isolated_modes", c.isolated_modes},
         {"seeds", c.seeds},
         {"double_sided_area", c.double_sided_area},
         {"per_cell_pairs", c.per_cell_pairs},
         {"write_vtk", c.write_vtk},
         {"output_dir", c.output_dir}};
  j["critical_count_pin"] =
      c.pin ? Json{{"count", c.pin->count}, {"reference_length", c.pin->reference_length}} : Json(nullptr);
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  check_keys(j, {"generation", "p_primes", "critical_count_pin", "mesh", "orls", "k_matrix",
                 "phi_matrix", "strict_fracture_porosity", "flow", "solver", "tracers", "schedule",
                 "isolated_modes", "seeds", "double_sided_area", "per_cell_pairs", "write_vtk",
                 "output_dir"},
             "config");
  RunConfig c;
  try {
    if (j.contains("generation")) {
      check_keys(j.at("generation"), {"alpha", "r0", "ru", "kappa", "mean_dir", "L", "buffer",
                                      "n_fractures", "seed", "polygon_vertices",
                                      "count_in_expanded_domain", "max_attempts"},
                 "generation");
      c.generation = generation_params_from_json(j.at("generation"));
    }
    c.p_primes = j.value("p_primes", c.p_primes);
    if (j.contains("critical_count_pin")) {
      const auto& p = j.at("critical_count_pin");
      if (p.is_null()) {
        c.pin.reset();
      } else {
        check_keys(p, {"count", "reference_length"}, "critical_count_pin");
        CriticalCountPin pin;
        pin.count = p.value("count", pin.count);
        pin.reference_length = p.value("reference_length", pin.reference_length);
        c.pin = pin;
      }
    }
    if (j.contains("mesh")) {
      const auto& m = j.at("mesh");
      check_keys(m, {"l", "orl", "balance_2to1", "polygon_vertices"}, "mesh");
      c.mesh.l = m.value("l", c.mesh.l);
      c.mesh.orl = m.value("orl", c.mesh.orl);
      c.mesh.balance_2to1 = m.value("balance_2to1", c.mesh.balance_2to1);
      c.mesh.polygon_vertices = m.value("polygon_vertices", c.mesh.polygon_vertices);
    }
    c.orls = j.value("orls", c.orls);
    c.k_matrix = j.value("k_matrix", c.k_matrix);
    c.phi_matrix = j.value("phi_matrix", c.phi_matrix);
    c.strict_fracture_porosity = j.value("strict_fracture_porosity", c.strict_fracture_porosity);
    if (j.contains("flow")) {
      const auto& f = j.at("flow");
      check_keys(f, {"p_in", "p_out", "viscosity"}, "flow");
      c.flow.p_in = f.value("p_in", c.flow.p_in);
      c.flow.p_out = f.value("p_out", c.flow.p_out);
      c.flow.viscosity = f.value("viscosity", c.flow.viscosity);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      check_keys(s, {"tolerance", "max_iterations", "balance_tolerance"}, "solver");
      c.solver.tolerance = s.value("tolerance", c.solver.tolerance);
      c.solver.max_iterations = s.value("max_iterations", c.solver.max_iterations);
      c.solver.balance_tolerance = s.value("balance_tolerance", c.solver.balance_tolerance);
    }
    if (j.contains("tracers")) {
      c.tracers.clear();
      for (const auto& t : j.at("tracers")) c.tracers.push_back(tracer_from_json(t));
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      check_keys(s, {"t_first_years", "t_end_years", "per_decade", "dt_initial_years", "growth",
                     "dt_max_years"},
                 "schedule");
      auto& o = c.schedule;
      o.t_first_years = s.value("t_first_years", o.t_first_years);
      o.t_end_years = s.value("t_end_years", o.t_end_years);
      o.per_decade = s.value("per_decade", o.per_decade);
      o.dt_initial_years = s.value("dt_initial_years", o.dt_initial_years);
      o.growth = s.value("growth", o.growth);
      if (s.contains("dt_max_years")) {
        o.dt_max_years = s.at("dt_max_years").is_null() ? std::numeric_limits<double>::infinity()
                                                          : s.at("dt_max_years").get<double>();
      }
    }
    c.isolated_modes = j.value("isolated_modes", c.isolated_modes);
    c.seeds = j.value("seeds", c.seeds);
    c.double_sided_area = j.value("double_sided_area", c.double_sided_area);
    c.per_cell_pairs = j.value("per_cell_pairs", c.per_cell_pairs);
    c.write_vtk = j.value("write_vtk", c.write_vtk);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw std::invalid_argument("cannot parse " + path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw std::invalid_argument(e.what());
  }
  return run_config_from_json(j);
}

namespace {

Json to_json(const SummaryRow& r) {
  return {{"seed", r.key.seed},
          {"p_prime", r.key.p_prime},
          {"isolated_mode", r.key.isolated_mode},
          {"orl", r.key.orl},
          {"k_m", r.key.k_m},
          {"n_fractures", r.n_fractures},
          {"n_meshed", r.n_meshed},
          {"n_cells", r.n_cells},
          {"n_fracture_cells", r.n_fracture_cells},
          {"dfn_percolates", r.dfn_percolates},
          {"mesh_percolates", r.mesh_percolates},
          {"false_pairs", r.false_pairs},
          {"cells_with_false", r.cells_with_false},
          {"fracture_volume", r.fracture_volume},
          {"k_eff", r.k_eff},
          {"q_in", r.q_in},
          {"q_out", r.q_out},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"k_harmonic", r.k_harmonic},
          {"k_arithmetic", r.k_arithmetic},
          {"within_wiener_bounds", r.within_wiener_bounds},
          {"error_factor", r.error_factor},
          {"status", r.status},
          {"last_stage", to_string(r.last_stage)},
          {"error", r.error}};
}

std::string tag(std::uint64_t seed, double p_prime, const std::string& mode) {
  return "s" + std::to_string(seed) + "_p" + format_double(p_prime) + "_" + mode;
}

struct ArtifactLog {
  fs::path root;
  Json entries = Json::array();

  void add(const fs::path& rel) {
    const fs::path full = root / rel;
    entries.push_back({{"path", rel.generic_string()},
                       {"sha256", sha256_file(full)},
                       {"bytes", fs::file_size(full)}});
  }
  void write(const fs::path& rel, const std::string& text) {
    write_text(root / rel, text);
    add(rel);
  }
};

}  // namespace

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "seed,p_prime,isolated_mode,orl,k_m,n_fractures,n_meshed,n_cells,n_fracture_cells,"
        "dfn_percolates,mesh_percolates,false_pairs,cells_with_false,fracture_volume,k_eff,q_in,"
        "q_out,iterations,residual,k_harmonic,k_arithmetic,within_wiener_bounds,error_factor,"
        "status,last_stage\n";
  for (const auto& r : rows) {
    os << r.key.seed << ',' << format_double(r.key.p_prime) << ',' << r.key.isolated_mode << ','
       << r.key.orl << ',' << format_double(r.key.k_m) << ',' << r.n_fractures << ',' << r.n_meshed
       << ',' << r.n_cells << ',' << r.n_fracture_cells << ',' << r.dfn_percolates << ','
       << r.mesh_percolates << ',' << r.false_pairs << ',' << r.cells_with_false << ','
       << format_double(r.fracture_volume) << ',' << format_double(r.k_eff) << ','
       << format_double(r.q_in) << ',' << format_double(r.q_out) << ',' << r.iterations << ','
       << format_double(r.residual) << ',' << format_double(r.k_harmonic) << ','
       << format_double(r.k_arithmetic) << ',' << r.within_wiener_bounds << ','
       << format_double(r.error_factor) << ',' << r.status << ',' << to_string(r.last_stage)
       << '\n';
  }
  return os.str();
}

PipelineResult run_pipeline(const RunConfig& config, Stage last) {
  config.validate();
  const fs::path root = config.output_dir;
  fs::create_directories(root);
  ArtifactLog log{root};
  PipelineResult result;
  Json table1 = Json::array();
  Json topology = Json::array();

  const double L = config.generation.L;
  const std::int64_t n_crit = critical_fracture_count(config.generation, L, config.pin);
  const std::int64_t n_crit_eq = critical_fracture_count(config.generation, L, std::nullopt);
  const Box domain = Box::cube(L);

  auto fail = [&](SummaryRow& row, Stage stage, const std::exception& e) {
    row.status = "failed";
    row.last_stage = stage;
    row.error = e.what();
    if (result.exit_code == 0) result.exit_code = exit_code(stage);
    std::clog << "udfm: " << to_string(stage) << " failed for seed " << row.key.seed << " p'="
              << row.key.p_prime << " orl=" << row.key.orl << ": " << e.what() << '\n';
  };

  std::vector<std::pair<double, std::int64_t>> densities;
  if (config.p_primes.empty()) {
    const std::int64_t n = config.generation.n_fractures;
    densities.emplace_back(n_crit > 0 ? static_cast<double>(n) / static_cast<double>(n_crit) : 0.0, n);
  } else {
    for (double pp : config.p_primes) densities.emplace_back(pp, fractures_for_density(pp, n_crit));
  }
  const bool want_removed = std::find(config.isolated_modes.begin(), config.isolated_modes.end(),
                                      "removed") != config.isolated_modes.end();
  const IntensityOptions iopt{config.double_sided_area, config.generation.polygon_vertices};

  for (std::uint64_t seed : config.seeds) {
    for (const auto& [p_prime, n_fractures] : densities) {
      auto blank_row = [&](const std::string& mode, int orl, double km) {
        SummaryRow r;
        r.key = RunKey{seed, p_prime, orl, km, mode};
        r.n_fractures = n_fractures;
        return r;
      };
      GenerationParams gen = config.generation;
      gen.seed = seed;
      gen.n_fractures = n_fractures;
      FractureNetwork network;
      IntersectionGraph graph;
      IsolatedRemoval removal;
      try {
        network = generate_network(gen);
        graph = build_intersection_graph(network, {kDefaultIntersectionEps, true, gen.polygon_vertices});
        removal = remove_isolated(network, graph);
      } catch (const std::exception& e) {
        for (const auto& mode : config.isolated_modes) {
          for (int orl : config.orls) {
            for (double km : config.k_matrix) {
              SummaryRow r = blank_row(mode, orl, km);
              fail(r, Stage::Generate, e);
              result.rows.push_back(r);
            }
          }
        }
        continue;
      }
      const bool dfn_perc = dfn_percolates(graph);
      const std::string base = tag(seed, p_prime, "");
      log.write(fs::path("networks") / (base + "network.jsonl"), network_to_jsonl(network));
      if (want_removed) {
        log.write(fs::path("networks") / (base + "removed.jsonl"), network_to_jsonl(removal.network));
      }
      table1.push_back({{"seed", seed},
                        {"p_prime", p_prime},
                        {"N", removal.n_total},
                        {"N_hat", removal.n_retained},
                        {"N_hat_over_N", removal.retained_fraction()},
                        {"P32", fracture_intensity(network, domain, iopt)},
                        {"P32_hat", fracture_intensity(removal.network, domain, iopt)},
                        {"dfn_percolates", dfn_perc}});
      if (last == Stage::Generate) continue;

      for (const auto& mode : config.isolated_modes) {
        const bool removed = mode == "removed";
        const FractureNetwork& net = removed ? removal.network : network;
        const IntersectionGraph net_graph =
            removed ? build_intersection_graph(net, {kDefaultIntersectionEps, true, gen.polygon_vertices})
                    : graph;
        const std::size_t first_row = result.rows.size();
        // btcs[k_m index][tracer index] -> (orl, curve)
        std::map<std::pair<std::size_t, std::size_t>, std::vector<std::pair<int, BreakthroughCurve>>> btcs;

        for (int orl : config.orls) {
          MeshParams mp = config.mesh;
          mp.orl = orl;
          OctreeMesh mesh;
          FalseConnectionReport fcr;
          bool mesh_perc = false;
          try {
            mesh = build_mesh(net, mp);
            fcr = count_false_connections(mesh, net_graph, equivalent_hex_count(L, mp.l, orl));
            mesh_perc = mesh_percolates(mesh);
          } catch (const std::exception& e) {
            for (double km : config.k_matrix) {
              SummaryRow r = blank_row(mode, orl, km);
              fail(r, Stage::Mesh, e);
              result.rows.push_back(r);
            }
            continue;
          }
          topology.push_back({{"seed", seed},
                              {"p_prime", p_prime},
                              {"isolated_mode", mode},
                              {"orl", orl},
                              {"false_pairs", fcr.num_false_pairs},
                              {"false_incidences", fcr.num_false_incidences},
                              {"fc", fcr.cells_with_false},
                              {"fracture_cells", fcr.total_fracture_cells},
                              {"vc", fcr.total_cells},
                              {"n", fcr.equivalent_cells},
                              {"fc_over_vc", fcr.fc_over_vc},
                              {"vc_over_n", fcr.vc_over_n},
                              {"dfn_percolates", dfn_percolates(net_graph)},
                              {"mesh_percolates", mesh_perc}});

          for (std::size_t ki = 0; ki < config.k_matrix.size(); ++ki) {
            const double km = config.k_matrix[ki];
            SummaryRow row = blank_row(mode, orl, km);
            row.n_meshed = static_cast<std::int64_t>(net.size());
            row.n_cells = static_cast<std::int64_t>(mesh.size());
            row.n_fracture_cells = fcr.total_fracture_cells;
            row.dfn_percolates = dfn_percolates(net_graph);
            row.mesh_percolates = mesh_perc;
            row.false_pairs = fcr.reported_false(config.per_cell_pairs);
            row.cells_with_false = fcr.cells_with_false;
            row.last_stage = Stage::Mesh;
            if (last == Stage::Mesh) {
              result.rows.push_back(row);
              continue;
            }
            Stage stage = Stage::Upscale;
            try {
              UpscaleOptions uo;
              uo.k_matrix = km;
              uo.phi_matrix = config.phi_matrix;
              uo.strict_fracture_porosity = config.strict_fracture_porosity;
              uo.polygon_vertices = config.mesh.polygon_vertices;
              const PropertyField props = upscale_mesh(mesh, net, uo);
              row.fracture_volume = props.summary.fracture_volume;
              row.last_stage = Stage::Upscale;
              const std::string run_tag = tag(seed, p_prime, mode) + "_orl" + std::to_string(orl) +
                                          "_km" + format_double(km);
              if (last == Stage::Upscale) {
                if (config.write_vtk) log.write(fs::path("meshes") / (run_tag + ".vtk"), [&] {
                  std::ostringstream os;
                  write_vtk(os, mesh, props.cells);
                  return os.str();
                }());
                result.rows.push_back(row);
                continue;
              }
              stage = Stage::Flow;
              const FlowField flow = solve_flow(mesh, props.cells, config.flow, config.solver);
              row.k_eff = flow.k_eff;
              row.q_in = flow.q_in;
              row.q_out = flow.q_out;
              row.iterations = flow.iterations;
              row.residual = flow.residual;
              row.k_harmonic = flow.k_harmonic;
              row.k_arithmetic = flow.k_arithmetic;
              row.within_wiener_bounds = flow.within_wiener_bounds;
              row.last_stage = Stage::Flow;
              if (config.write_vtk) {
                std::ostringstream os;
                write_vtk(os, mesh, props.cells, flow.pressure);
                log.write(fs::path("meshes") / (run_tag + ".vtk"), os.str());
              }
              if (last == Stage::Flow) {
                result.rows.push_back(row);
                continue;
              }
              stage = Stage::Transport;
              for (std::size_t ti = 0; ti < config.tracers.size(); ++ti) {
                TransportResult tr = run_transport(mesh, props.cells, flow, config.tracers[ti], config.schedule);
                btcs[{ki, ti}].emplace_back(orl, std::move(tr.btc));
              }
              row.last_stage = Stage::Transport;
            } catch (const std::exception& e) {
              fail(row, stage, e);
            }
            result.rows.push_back(row);
          }
        }

        // Error factor against the finest successful refinement.
        for (double km : config.k_matrix) {
          const SummaryRow* ref = nullptr;
          for (std::size_t i = first_row; i < result.rows.size(); ++i) {
            const auto& r = result.rows[i];
            if (r.key.k_m == km && r.status == "ok" && r.k_eff > 0.0 && (!ref || r.key.orl > ref->key.orl)) {
              ref = &result.rows[i];
            }
          }
          if (!ref) continue;
          const double k_ref = ref->k_eff;
          for (std::size_t i = first_row; i < result.rows.size(); ++i) {
            auto& r = result.rows[i];
            if (r.key.k_m == km && r.status == "ok" && r.k_eff > 0.0) {
              r.error_factor = keff_error_factor(r.k_eff, k_ref);
            }
          }
        }

        // BTCs normalized by the conservative peak at the coarsest refinement.
        for (std::size_t ki = 0; ki < config.k_matrix.size(); ++ki) {
          const BreakthroughCurve* reference = nullptr;
          int ref_orl = 0;
          for (std::size_t ti = 0; ti < config.tracers.size(); ++ti) {
            if (config.tracers[ti].kind != TracerKind::Conservative) continue;
            const auto it = btcs.find({ki, ti});
            if (it == btcs.end()) continue;
            for (const auto& [orl, curve] : it->second) {
              if (!reference || orl < ref_orl) {
                reference = &curve;
                ref_orl = orl;
              }
            }
            break;
          }
          for (std::size_t ti = 0; ti < config.tracers.size(); ++ti) {
            const auto it = btcs.find({ki, ti});
            if (it == btcs.end()) continue;
            std::ostringstream os;
            bool header = true;
            for (const auto& [orl, curve] : it->second) {
              BreakthroughCurve out = curve;
              if (reference) {
                try {
                  out = normalize_btc(curve, *reference);
                } catch (const std::invalid_argument&) {
                  // Flat reference: keep raw columns only.
                }
              }
              write_btc_csv(os, out, config.tracers[ti].kind,
                            RunKey{seed, p_prime, orl, config.k_matrix[ki], mode}, header);
              header = false;
            }
            log.write(fs::path("btc") / (tag(seed, p_prime, mode) + "_km" + format_double(config.k_matrix[ki]) +
                                         "_" + to_string(config.tracers[ti].kind) + "_" +
                                         std::to_string(ti) + ".csv"),
                      os.str());
          }
        }
      }
    }
  }

  log.write("summary.csv", summary_csv(result.rows));
  Json config_json = to_json(config);
  config_json.erase("output_dir");
  Json runs = Json::array();
  for (const auto& r : result.rows) runs.push_back(to_json(r));
  result.manifest = Json{{"format", "udfm-manifest"},
                         {"version", 1},
                         {"config", config_json},
                         {"config_hash", sha256_hex(config_json.dump())},
                         {"last_stage", to_string(last)},
                         {"critical_count", n_crit},
                         {"critical_count_unpinned", n_crit_eq},
                         {"table1", table1},
                         {"topology", topology},
                         {"runs", runs},
                         {"artifacts", log.entries},
                         {"exit_code", result.exit_code}};
  write_text(root / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

MatchClass classify_percolation(bool dfn, bool mesh) {
  if (dfn == mesh) return MatchClass::Match;
  return mesh ? MatchClass::SpuriousMesh : MatchClass::MissedMesh;
}

std::string to_string(MatchClass c) {
  switch (c) {
    case MatchClass::Match: return "match";
    case MatchClass::SpuriousMesh: return "mismatch-spurious";
    case MatchClass::MissedMesh: return "mismatch-missed";
  }
  return "unknown";
}

namespace {

std::string fixed(double x, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << x;
  return os.str();
}

}  // namespace

std::vector<fs::path> report_tables(const Json& manifest, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const Json empty = Json::array();
  const Json& t1 = manifest.contains("table1") ? manifest.at("table1") : empty;
  const Json& topo = manifest.contains("topology") ? manifest.at("topology") : empty;
  const bool per_cell_pairs =
      manifest.contains("config") && manifest.at("config").value("per_cell_pairs", false);

  {
    std::ostringstream csv, md;
    csv << "seed,p_prime,N,N_hat,N_hat/N,P32,P32_hat,dfn_percolates\n";
    md << "| seed | p' | N | N^ | N^/N | P32 | P32^ | percolates |\n|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : t1) {
      const double p = r.at("p_prime").get<double>();
      csv << r.at("seed").get<std::uint64_t>() << ',' << format_double(p) << ','
          << r.at("N").get<std::int64_t>() << ',' << r.at("N_hat").get<std::int64_t>() << ','
          << format_double(r.at("N_hat_over_N").get<double>()) << ','
          << format_double(r.at("P32").get<double>()) << ',' << format_double(r.at("P32_hat").get<double>())
          << ',' << r.at("dfn_percolates").get<bool>() << '\n';
      md << "| " << r.at("seed").get<std::uint64_t>() << " | " << format_double(p) << " | "
         << r.at("N").get<std::int64_t>() << " | " << r.at("N_hat").get<std::int64_t>() << " | "
         << fixed(r.at("N_hat_over_N").get<double>(), 3) << " | " << fixed(r.at("P32").get<double>(), 4)
         << " | " << fixed(r.at("P32_hat").get<double>(), 4) << " | "
         << (r.at("dfn_percolates").get<bool>() ? "+" : "-") << " |\n";
    }
    write_text(out_dir / "table1.csv", csv.str());
    write_text(out_dir / "table1.md", md.str());
    written.push_back(out_dir / "table1.csv");
    written.push_back(out_dir / "table1.md");
  }
  {
    std::vector<Table2Row> rows;
    std::ostringstream md;
    md << "| seed | mode | p' | orl | #f | fc | vc | fc/vc [%] | vc/n [%] |\n"
          "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : topo) {
      Table2Row row;
      row.seed = r.at("seed").get<std::uint64_t>();
      row.isolated_mode = r.at("isolated_mode").get<std::string>();
      row.p_prime = r.at("p_prime").get<double>();
      row.orl = r.at("orl").get<int>();
      row.report.num_false_pairs = r.at("false_pairs").get<std::int64_t>();
      row.report.num_false_incidences = r.at("false_incidences").get<std::int64_t>();
      row.report.cells_with_false = r.at("fc").get<std::int64_t>();
      row.report.total_fracture_cells = r.at("fracture_cells").get<std::int64_t>();
      row.report.total_cells = r.at("vc").get<std::int64_t>();
      row.report.equivalent_cells = r.at("n").get<std::uint64_t>();
      row.report.fc_over_vc = r.at("fc_over_vc").get<double>();
      row.report.vc_over_n = r.at("vc_over_n").get<double>();
      md << "| " << row.seed << " | " << row.isolated_mode << " | " << format_double(row.p_prime)
         << " | " << row.orl << " | " << row.report.reported_false(per_cell_pairs) << " | "
         << row.report.cells_with_false << " | " << row.report.total_cells << " | "
         << fixed(row.report.fc_over_vc, 2) << " | " << fixed(row.report.vc_over_n, 2) << " |\n";
      rows.push_back(row);
    }
    std::ostringstream csv;
    write_table2_csv(csv, rows, per_cell_pairs);
    write_text(out_dir / "table2.csv", csv.str());
    write_text(out_dir / "table2.md", md.str());
    written.push_back(out_dir / "table2.csv");
    written.push_back(out_dir / "table2.md");
  }
  {
    std::ostringstream csv, md;
    csv << "seed,p_prime,isolated_mode,orl,dfn_percolates,mesh_percolates,class\n";
    // Pivot: one Markdown row per (seed, p', mode), one column per orl.
    std::set<int> orls;
    for (const auto& r : topo) orls.insert(r.at("orl").get<int>());
    std::map<std::tuple<std::uint64_t, double, std::string>, std::map<int, std::pair<bool, bool>>> grid;
    for (const auto& r : topo) {
      const bool dfn = r.at("dfn_percolates").get<bool>();
      const bool mesh = r.at("mesh_percolates").get<bool>();
      const auto key = std::make_tuple(r.at("seed").get<std::uint64_t>(), r.at("p_prime").get<double>(),
                                       r.at("isolated_mode").get<std::string>());
      grid[key][r.at("orl").get<int>()] = {dfn, mesh};
      csv << std::get<0>(key) << ',' << format_double(std::get<1>(key)) << ',' << std::get<2>(key) << ','
          << r.at("orl").get<int>() << ',' << dfn << ',' << mesh << ','
          << to_string(classify_percolation(dfn, mesh)) << '\n';
    }
    md << "| seed | p' | mode | DFN |";
    for (int o : orls) md << " orl " << o << " |";
    md << "\n|---|---|---|---|";
    for (std::size_t i = 0; i < orls.size(); ++i) md << "---|";
    md << '\n';
    for (const auto& [key, cells] : grid) {
      const bool dfn = cells.begin()->second.first;
      md << "| " << std::get<0>(key) << " | " << format_double(std::get<1>(key)) << " | "
         << std::get<2>(key) << " | " << (dfn ? "+" : "-") << " |";
      for (int o : orls) {
        const auto it = cells.find(o);
        if (it == cells.end()) {
          md << "  |";
          continue;
        }
        const MatchClass c = classify_percolation(it->second.first, it->second.second);
        md << ' ' << (it->second.second ? "+" : "-")
           << (c == MatchClass::Match ? "" : c == MatchClass::SpuriousMesh ? " (red)" : " (yellow)") << " |";
      }
      md << '\n';
    }
    md << "\n+ : fracture cells connect inflow and outflow. (red): mesh percolates but the DFN does not. "
          "(yellow): DFN percolates but the mesh does not.\n";
    write_text(out_dir / "table3.csv", csv.str());
    write_text(out_dir / "table3.md", md.str());
    written.push_back(out_dir / "table3.csv");
    written.push_back(out_dir / "table3.md");
  }
  {
    // Flow summary for the matrix-permeability sweep.
    std::ostringstream md;
    md << "| seed | p' | mode | orl | k_m | k_eff | e_i | status |\n|---|---|---|---|---|---|---|---|\n";
    if (manifest.contains("runs")) {
      for (const auto& r : manifest.at("runs")) {
        md << "| " << r.at("seed").get<std::uint64_t>() << " | " << format_double(r.at("p_prime").get<double>())
           << " | " << r.at("isolated_mode").get<std::string>() << " | " << r.at("orl").get<int>() << " | "
           << sci(r.at("k_m").get<double>()) << " | " << sci(r.at("k_eff").get<double>()) << " | "
           << sci(r.at("error_factor").get<double>()) << " | " << r.at("status").get<std::string>() << " |\n";
      }
    }
    write_text(out_dir / "flow.md", md.str());
    written.push_back(out_dir / "flow.md");
  }
  return written;
}

}  // namespace udfm
