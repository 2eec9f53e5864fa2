// Command-line driver for the fracture-network upscaling pipeline.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "udfm/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  bool desk = false;
  std::vector<std::uint64_t> seeds;
  std::vector<int> orls;
  std::vector<double> k_matrix;
  std::vector<double> p_primes;
  std::string isolated;
  std::string out;
  bool vtk = false;
};

udfm::RunConfig resolve(const Overrides& o) {
  udfm::RunConfig c = o.desk ? udfm::RunConfig::desk() : udfm::RunConfig{};
  if (!o.config_path.empty()) c = udfm::load_config(o.config_path);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.orls.empty()) c.orls = o.orls;
  if (!o.k_matrix.empty()) c.k_matrix = o.k_matrix;
  if (!o.p_primes.empty()) c.p_primes = o.p_primes;
  if (!o.isolated.empty()) c.isolated_modes = {o.isolated};
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.vtk) c.write_vtk = true;
  c.validate();
  return c;
}

int run_stage(const Overrides& o, udfm::Stage last, bool report) {
  udfm::RunConfig config;
  try {
    config = resolve(o);
  } catch (const std::exception& e) {
    std::cerr << "udfm: config error: " << e.what() << '\n';
    return udfm::kExitConfigError;
  }
  udfm::PipelineResult res;
  try {
    res = udfm::run_pipeline(config, last);
  } catch (const std::exception& e) {
    std::cerr << "udfm: pipeline aborted: " << e.what() << '\n';
    return 1;
  }
  std::cout << "runs: " << res.rows.size() << ", output: " << config.output_dir << '\n';
  int code = res.exit_code;
  if (report) {
    try {
      udfm::report_tables(res.manifest, config.output_dir);
    } catch (const std::exception& e) {
      std::cerr << "udfm: report failed: " << e.what() << '\n';
      if (code == 0) code = udfm::exit_code(udfm::Stage::Report);
    }
  }
  return code;
}

int run_report(const std::string& dir) {
  try {
    const auto manifest = udfm::Json::parse(udfm::read_text(std::filesystem::path(dir) / "manifest.json"));
    for (const auto& p : udfm::report_tables(manifest, dir)) std::cout << p.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "udfm: report failed: " << e.what() << '\n';
    return udfm::exit_code(udfm::Stage::Report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fracture network generation, octree upscaling, flow and transport"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_path, "JSON run configuration");
    sub->add_flag("--desk", o.desk, "Start from desk-scale defaults (L = 25 m)");
    sub->add_option("--seed", o.seeds, "Seed(s), overrides the config list");
    sub->add_option("--orl", o.orls, "Refinement level(s)");
    sub->add_option("--km", o.k_matrix, "Matrix permeability value(s), m^2");
    sub->add_option("--p-prime", o.p_primes, "Dimensionless density value(s)");
    sub->add_option("--isolated", o.isolated, "Isolated fractures: retained or removed")
        ->check(CLI::IsMember({"retained", "removed"}));
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--vtk", o.vtk, "Write legacy VTK meshes");
  };

  struct Entry {
    const char* name;
    const char* help;
    udfm::Stage stage;
    bool report;
  };
  const Entry entries[] = {
      {"generate", "Generate networks and density statistics", udfm::Stage::Generate, false},
      {"mesh", "Build octree meshes and topology reports", udfm::Stage::Mesh, false},
      {"upscale", "Upscale cell permeability and porosity", udfm::Stage::Upscale, false},
      {"flow", "Solve steady pressure and effective permeability", udfm::Stage::Flow, false},
      {"transport", "Run tracer transport and write breakthrough curves", udfm::Stage::Transport, false},
      {"all", "Run every stage and emit report tables", udfm::Stage::Transport, true},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub);
    subs.emplace_back(sub, &e);
  }
  std::string report_dir = "udfm_out";
  CLI::App* report = app.add_subcommand("report", "Write tables from an existing manifest");
  report->add_option("--out", report_dir, "Directory holding manifest.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the config-error exit code; --help exits 0.
    return app.exit(e) == 0 ? 0 : udfm::kExitConfigError;
  }

  if (*report) return run_report(report_dir);
  for (const auto& [sub, e] : subs) {
    if (*sub) return run_stage(o, e->stage, e->report);
  }
  return 1;
}
