// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "udfm/flow.hpp"
#include "udfm/io.hpp"
#include "udfm/network.hpp"
#include "udfm/octree.hpp"
#include "udfm/pipeline.hpp"
#include "udfm/rng.hpp"
#include "udfm/topology.hpp"
#include "udfm/transport.hpp"
#include "udfm/upscaling.hpp"

using namespace udfm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::vector<CellProperties> uniform(const OctreeMesh& m, double k, double phi) {
  return std::vector<CellProperties>(m.size(), CellProperties{k, phi, false, 0.0});
}

OctreeMesh grid(const Box& box, double l) {
  OctreeMesh m = build_initial_grid(box, l);
  build_face_adjacency(m, true);
  return m;
}

struct Level {
  OctreeMesh mesh;
  PropertyField props;
  FlowField flow;
};

Level solve_level(const FractureNetwork& net, int orl, double km) {
  Level lv;
  MeshParams mp;
  mp.l = 5.0;
  mp.orl = orl;
  lv.mesh = build_mesh(net, mp);
  UpscaleOptions uo;
  uo.k_matrix = km;
  lv.props = upscale_mesh(lv.mesh, net, uo);
  lv.flow = solve_flow(lv.mesh, lv.props.cells, FlowBC{});
  return lv;
}

// Desk network at p' = 1 solved at orl 1..3, shared by criteria 4 and 5.
struct DeskRuns {
  FractureNetwork net;
  std::vector<Level> levels;
};

const DeskRuns& desk_runs() {
  static const DeskRuns runs = [] {
    const RunConfig desk = RunConfig::desk();
    GenerationParams p = desk.generation;
    p.seed = 1;
    p.n_fractures = fractures_for_density(1.0, critical_fracture_count(p, p.L, desk.pin));
    DeskRuns r;
    r.net = generate_network(p);
    for (int orl = 1; orl <= 3; ++orl) r.levels.push_back(solve_level(r.net, orl, 1e-16));
    return r;
  }();
  return runs;
}

// Two non-intersecting discs bridged only by coarse cells, k_m = 1e-18;
// shared by criteria 4, 6 and 7.
struct PairRuns {
  FractureNetwork net;
  Level coarse, fine;
};

const PairRuns& pair_runs() {
  static const PairRuns runs = [] {
    PairRuns r;
    r.net = fixtures::bridged_pair();
    r.coarse = solve_level(r.net, 1, 1e-18);
    r.fine = solve_level(r.net, 3, 1e-18);
    return r;
  }();
  return runs;
}

// 1. Equivalent hex counts.
void equivalent_counts(Outcome& o) {
  const std::uint64_t expected[] = {9261, 68921, 531441, 4173281};
  for (int orl = 1; orl <= 4; ++orl) {
    const auto n = equivalent_hex_count(50.0, 5.0, orl);
    o.detail << " orl" << orl << "=" << n;
    o.require(n == expected[orl - 1], "count at orl " + std::to_string(orl));
  }
}

// 2. Sampling fidelity.
void sampling(Outcome& o) {
  const GenerationParams p;
  const int n = 100000;
  CounterRng rng(20240601);
  std::vector<double> r(n);
  for (auto& x : r) x = sample_radius(rng.uniform(), p);
  std::sort(r.begin(), r.end());
  // Integral of the density alpha/r0 (r/r0)^(-1-alpha) / (1 - (ru/r0)^-alpha).
  const double a = p.alpha;
  auto cdf = [&](double x) {
    return (1.0 - std::pow(x / p.r0, -a)) / (1.0 - std::pow(p.ru / p.r0, -a));
  };
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = cdf(r[static_cast<std::size_t>(i)]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  Vec3 sum = Vec3::Zero();
  CounterRng orng(77);
  for (int i = 0; i < n; ++i) sum += sample_orientation(orng, 0.1, Vec3::UnitZ());
  const double resultant = sum.norm() / n;
  o.detail << " KS=" << sci(ks) << " vMF_resultant=" << sci(resultant);
  o.require(ks < 0.01, "KS < 0.01");
  o.require(resultant < 0.05, "mean resultant < 0.05");
}

// 3. Single spanning fracture.
void single_fracture(Outcome& o) {
  const double L = 25.0, km = 1e-16, radius = 18.0;
  const auto net = fixtures::make_network(L, {fixtures::disc(0, Vec3(0, 0, 0.1), Vec3::UnitZ(), radius)});
  const double b = net.fractures[0].aperture;
  const double analytic = km * (1.0 - b / L) + b * b * b / (12.0 * L);
  const double v_exact = L * L * b;
  double v_ref = 0.0;
  for (int orl = 1; orl <= 3; ++orl) {
    const Level lv = solve_level(net, orl, km);
    const double v = lv.props.summary.fracture_volume;
    if (orl == 1) v_ref = v;
    const double ev = std::abs(v - v_ref) / v_ref;
    const double ek = std::abs(lv.flow.k_eff - analytic) / analytic;
    o.detail << " orl" << orl << ":vol_dev=" << sci(ev) << ",k_err=" << sci(ek);
    o.require(ev <= 0.01, "fracture volume constant within 1% at orl " + std::to_string(orl));
    o.require(ek <= 0.05, "k_eff within 5% at orl " + std::to_string(orl));
    o.require(std::abs(v - v_exact) / v_exact <= 0.01, "fracture volume matches L^2 b");
  }
}

// 4. Flow oracles.
void flow_oracles(Outcome& o) {
  std::vector<const FlowField*> heterogeneous;
  for (const auto& lv : desk_runs().levels) heterogeneous.push_back(&lv.flow);
  heterogeneous.push_back(&pair_runs().coarse.flow);
  heterogeneous.push_back(&pair_runs().fine.flow);
  const Box box = Box::cube(10.0);
  const auto m = grid(box, 1.0);
  const double km = 3e-15;
  const auto hom = solve_flow(m, uniform(m, km, 0.1), FlowBC{});
  const double e_hom = std::abs(hom.k_eff - km) / km;

  const double k1 = 1e-12, k2 = 1e-15;
  auto slabs = [&](int axis) {
    auto props = uniform(m, k1, 0.1);
    for (const auto& c : m.cells()) {
      if (c.box.center()[axis] > 0.0) props[static_cast<std::size_t>(c.id)].k = k2;
    }
    return solve_flow(m, props, FlowBC{}).k_eff;
  };
  const double harmonic = 2.0 / (1.0 / k1 + 1.0 / k2);
  const double arithmetic = 0.5 * (k1 + k2);
  const double e_series = std::abs(slabs(0) - harmonic) / harmonic;
  const double e_parallel = std::abs(slabs(2) - arithmetic) / arithmetic;
  bool wiener = true;
  for (const auto* f : heterogeneous) wiener = wiener && f->within_wiener_bounds;
  o.detail << " homogeneous=" << sci(e_hom) << " series=" << sci(e_series) << " parallel="
           << sci(e_parallel) << " wiener_runs=" << heterogeneous.size();
  o.require(e_hom <= 1e-8, "homogeneous within 1e-8");
  o.require(e_series <= 1e-6, "series slabs within 1e-6");
  o.require(e_parallel <= 1e-6, "parallel slabs within 1e-6");
  o.require(wiener && !heterogeneous.empty(), "Wiener bounds on every heterogeneous run");
}

// 5. Refinement trends on a desk network.
void trends(Outcome& o) {
  const DeskRuns& runs = desk_runs();
  const auto graph = build_intersection_graph(runs.net);
  std::vector<std::int64_t> nf;
  std::vector<double> k;
  for (const auto& lv : runs.levels) {
    nf.push_back(count_false_connections(lv.mesh, graph).num_false_pairs);
    k.push_back(lv.flow.k_eff);
  }
  std::vector<double> e;
  for (double ki : k) e.push_back(keff_error_factor(ki, k.back()));
  o.detail << " N=" << runs.net.size();
  for (int i = 0; i < 3; ++i) o.detail << " orl" << i + 1 << ":#f=" << nf[i] << ",k=" << sci(k[i]) << ",e=" << sci(e[i]);
  o.require(nf[0] >= nf[1] && nf[1] >= nf[2], "#f non-increasing");
  o.require(k[0] >= k[1] && k[1] >= k[2], "k_eff non-increasing");
  o.require(e[0] > e[1] && e[1] > e[2], "e_i decreasing");
}

// 6. Spurious coarse connectivity.
void topology_mismatch(Outcome& o) {
  const PairRuns& runs = pair_runs();
  const auto graph = build_intersection_graph(runs.net);
  const bool pc = mesh_percolates(runs.coarse.mesh);
  const bool pf = mesh_percolates(runs.fine.mesh);
  const double ratio = runs.coarse.flow.k_eff / runs.fine.flow.k_eff;
  o.detail << " dfn=" << dfn_percolates(graph) << " mesh_orl1=" << pc << " mesh_orl3=" << pf
           << " k_orl1=" << sci(runs.coarse.flow.k_eff) << " k_orl3=" << sci(runs.fine.flow.k_eff)
           << " ratio=" << sci(ratio);
  o.require(!dfn_percolates(graph), "pair does not percolate as a DFN");
  o.require(pc, "coarse mesh percolates");
  o.require(!pf, "fine mesh does not percolate");
  o.require(ratio >= 100.0, "k_eff ratio >= 1e2");
}

// 7. Early arrival through the spurious connection.
void early_breakthrough(Outcome& o) {
  const PairRuns& runs = pair_runs();
  OutputSchedule sched;
  sched.t_end_years = 1e8;
  const auto tracer = TracerParams::conservative();
  const auto coarse = run_transport(runs.coarse.mesh, runs.coarse.props.cells, runs.coarse.flow, tracer, sched);
  const auto fine = run_transport(runs.fine.mesh, runs.fine.props.cells, runs.fine.flow, tracer, sched);
  // Times are normalized by the peak of the topology-matched mesh.
  const auto nc = normalize_btc(coarse.btc, fine.btc);
  const auto nf = normalize_btc(fine.btc, fine.btc);
  auto early = [](const BreakthroughCurve& b) {
    for (std::size_t i : find_peaks(b)) {
      if (b.normalized_time[i] < 0.1) return b.normalized_time[i];
    }
    return -1.0;
  };
  const double ec = early(nc), ef = early(nf);
  o.detail << " t_ref=" << sci(peak_time(fine.btc)) << "yr coarse_peaks=" << find_peaks(coarse.btc).size()
           << " coarse_early_t=" << sci(ec) << " fine_peaks=" << find_peaks(fine.btc).size();
  o.require(ec > 0.0, "coarse BTC has a peak before 0.1");
  o.require(ef < 0.0, "fine BTC has no peak before 0.1");
}

// 8. Transport ledgers and scaling.
void ledgers(Outcome& o) {
  GenerationParams p = RunConfig::desk().generation;
  p.seed = 3;
  p.n_fractures = 250;
  const auto net = generate_network(p);
  const Level lv = solve_level(net, 1, 1e-16);
  OutputSchedule sched;
  double worst_cons = 0.0, worst_decay = 0.0;
  for (const auto& t : {TracerParams::conservative(), TracerParams::decaying(100.0)}) {
    const auto res = run_transport(lv.mesh, lv.props.cells, lv.flow, t, sched);
    const auto& b = res.btc;
    double worst = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      worst = std::max(worst, std::abs(b.cumulative[i] + b.in_domain[i] + b.decayed[i] - 1.0));
    }
    // Lateral faces are no-flow, so all outflow leaves through x-max.
    o.require(res.other_outflow_mass == 0.0, "no outflow through lateral faces");
    (t.kind == TracerKind::Conservative ? worst_cons : worst_decay) = worst;
  }

  // 1D symmetry: the sorbing run on an R-stretched schedule matches the conservative run.
  const auto line = grid(Box{Vec3(0, 0, 0), Vec3(50, 1, 1)}, 1.0);
  const auto lprops = uniform(line, 1e-14, 0.05);
  const auto lflow = solve_flow(line, lprops, FlowBC{});
  const double R = 4000.0;
  OutputSchedule s1;
  s1.t_first_years = 1e-1;
  s1.t_end_years = 1e5;
  s1.dt_initial_years = 1e-2;
  OutputSchedule sR = s1;
  sR.t_first_years *= R;
  sR.t_end_years *= R;
  sR.dt_initial_years *= R;
  const auto rc = run_transport(line, lprops, lflow, TracerParams::conservative(), s1);
  const auto rs = run_transport(line, lprops, lflow, TracerParams::sorbing(R), sR);
  double sym = 0.0;
  for (std::size_t i = 0; i < rc.btc.size() && i < rs.btc.size(); ++i) {
    sym = std::max({sym, std::abs(rs.btc.cumulative[i] - rc.btc.cumulative[i]),
                    std::abs(rs.btc.mass_rate[i] * R - rc.btc.mass_rate[i]) /
                        std::max(1.0, *std::max_element(rc.btc.mass_rate.begin(), rc.btc.mass_rate.end()))});
  }
  const bool same_size = rc.btc.size() == rs.btc.size();

  // Homogeneous block: sorbing peak over conservative peak.
  const auto block = grid(Box::cube(25.0), 2.5);
  const auto bprops = uniform(block, 1e-14, 0.01);
  const auto bflow = solve_flow(block, bprops, FlowBC{});
  OutputSchedule sb;
  sb.t_first_years = 1e-2;
  sb.t_end_years = 1e7;
  sb.per_decade = 40;
  const auto bc = run_transport(block, bprops, bflow, TracerParams::conservative(), sb);
  const auto bs = run_transport(block, bprops, bflow, TracerParams::sorbing(R), sb);
  const double delay = peak_time(bs.btc) / peak_time(bc.btc);

  o.detail << " conservative=" << sci(worst_cons) << " decay=" << sci(worst_decay) << " symmetry=" << sci(sym)
           << " peak_delay=" << sci(delay) << " (R=" << R << ")";
  o.require(worst_cons <= 1e-6, "conservative ledger within 1e-6 M0");
  o.require(worst_decay <= 1e-6, "decay ledger within 1e-6 M0");
  o.require(same_size && sym <= 1e-8, "time-rescaling symmetry within 1e-8");
  o.require(std::abs(delay / R - 1.0) <= 0.1, "sorbing delay within 10% of R");
}

// 9. Cell economy with isolated fractures removed, on the first seed whose
// p' = 1 network spans the domain.
void cell_economy(Outcome& o) {
  const RunConfig desk = RunConfig::desk();
  GenerationParams p = desk.generation;
  p.n_fractures = fractures_for_density(1.0, critical_fracture_count(p, p.L, desk.pin));
  IsolatedRemoval removal;
  for (p.seed = 1; p.seed <= 100; ++p.seed) {
    const auto net = generate_network(p);
    const auto graph = build_intersection_graph(net);
    if (!dfn_percolates(graph)) continue;
    removal = remove_isolated(net, graph);
    break;
  }
  o.require(removal.n_retained > 0, "a percolating seed exists");
  MeshParams mp;
  mp.l = 5.0;
  mp.orl = 3;
  const auto mesh = build_mesh(removal.network, mp);
  const auto n = equivalent_hex_count(p.L, mp.l, mp.orl);
  const double ratio = 100.0 * static_cast<double>(mesh.size()) / static_cast<double>(n);
  o.detail << " seed=" << p.seed << " N=" << removal.n_total << " N_hat=" << removal.n_retained << " vc=" << mesh.size() << " n=" << n
           << " vc/n=" << ratio << "%";
  o.require(ratio <= 60.0, "vc/n <= 60%");
}

// 10. Determinism of the full pipeline.
void determinism(Outcome& o) {
  RunConfig c = RunConfig::desk();
  c.orls = {1};
  c.tracers = {TracerParams::conservative()};
  const fs::path base = fs::temp_directory_path() / "udfm_acceptance_determinism";
  fs::remove_all(base);
  std::vector<std::string> summary, network;
  for (const char* run : {"a", "b"}) {
    c.output_dir = (base / run).string();
    const auto res = run_pipeline(c, Stage::Transport);
    o.require(res.exit_code == 0, std::string("run ") + run + " succeeded");
    summary.push_back(read_text(base / run / "summary.csv"));
    network.push_back(read_text(base / run / "networks" / "s1_p1_network.jsonl"));
  }
  o.detail << " summary_bytes=" << summary[0].size() << " network_bytes=" << network[0].size();
  o.require(summary[0] == summary[1], "summary.csv identical");
  o.require(network[0] == network[1], "network file identical");
  fs::remove_all(base);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"equivalent hex counts", equivalent_counts},
      {"sampling fidelity", sampling},
      {"single-fracture upscaling", single_fracture},
      {"flow oracles", flow_oracles},
      {"refinement trends", trends},
      {"topology mismatch", topology_mismatch},
      {"false early breakthrough", early_breakthrough},
      {"transport ledgers", ledgers},
      {"cell-count economy", cell_economy},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << ", "
              << std::round(secs * 10.0) / 10.0 << " s):" << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
