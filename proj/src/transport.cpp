#include "udfm/transport.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace udfm {

std::string to_string(TracerKind kind) {
  switch (kind) {
    case TracerKind::Conservative: return "conservative";
    case TracerKind::Decaying: return "decaying";
    case TracerKind::Sorbing: return "sorbing";
  }
  return "unknown";
}

TracerKind tracer_kind_from_string(const std::string& s) {
  if (s == "conservative") return TracerKind::Conservative;
  if (s == "decaying") return TracerKind::Decaying;
  if (s == "sorbing") return TracerKind::Sorbing;
  throw std::invalid_argument("unknown tracer kind '" + s + "'");
}

TracerParams TracerParams::conservative() { return {}; }

TracerParams TracerParams::decaying(double half_life_years) {
  TracerParams p;
  p.kind = TracerKind::Decaying;
  p.decay = std::numbers::ln2 / (half_life_years * kSecondsPerYear);
  return p;
}

TracerParams TracerParams::sorbing(double retardation) {
  TracerParams p;
  p.kind = TracerKind::Sorbing;
  p.retardation = retardation;
  return p;
}

void TracerParams::validate() const {
  if (!(diffusion >= 0.0)) throw std::invalid_argument("diffusion must be non-negative");
  if (!(decay >= 0.0)) throw std::invalid_argument("decay constant must be non-negative");
  if (!(retardation >= 1.0)) throw std::invalid_argument("retardation factor must be >= 1");
  if (!(injected_mass > 0.0)) throw std::invalid_argument("injected mass must be positive");
}

double retardation_factor(double distribution_coefficient, double porosity, double saturation,
                          double water_density) {
  if (!(porosity > 0.0 && saturation > 0.0 && water_density > 0.0)) {
    throw std::invalid_argument("porosity, saturation and water density must be positive");
  }
  return 1.0 + distribution_coefficient / (porosity * saturation * water_density);
}

std::vector<double> initialize_pulse(const OctreeMesh& mesh, std::span<const CellProperties> props,
                                     double injected_mass) {
  std::vector<double> c(mesh.size(), 0.0);
  double pore_volume = 0.0;
  for (const auto& cell : mesh.cells()) {
    if (mesh.touches(cell, BoundaryPlane::XMin)) {
      pore_volume += props[static_cast<std::size_t>(cell.id)].phi * cell.volume();
    }
  }
  if (!(pore_volume > 0.0)) throw std::invalid_argument("mesh has no inlet cells for the pulse");
  const double conc = injected_mass / pore_volume;
  for (const auto& cell : mesh.cells()) {
    if (mesh.touches(cell, BoundaryPlane::XMin)) c[static_cast<std::size_t>(cell.id)] = conc;
  }
  return c;
}

TransportOperator build_transport_operator(const OctreeMesh& mesh,
                                           std::span<const CellProperties> props,
                                           const FlowField& flow, const TracerParams& params) {
  params.validate();
  const std::size_t n = mesh.size();
  TransportOperator op;
  op.decay = params.decay;
  op.storage.resize(n);
  op.outlet_coeff.assign(n, 0.0);
  op.other_out_coeff.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = props[i].phi;
    const double r = params.cellwise_retardation
                         ? retardation_factor(params.distribution_coefficient, phi,
                                              params.saturation, params.water_density)
                         : params.retardation;
    op.storage[i] = r * phi * mesh.cells()[i].volume();
  }

  std::vector<Eigen::Triplet<double>> trip;
  const auto& faces = mesh.faces();
  trip.reserve(faces.size() * 4);
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    const double q = flow.face_flux[fi];
    const auto a = static_cast<Eigen::Index>(f.cell_a);
    if (f.is_boundary()) {
      // Outflow leaves at the cell concentration; inflow water carries none.
      if (q > 0.0) {
        trip.emplace_back(a, a, q);
        if (f.plane == BoundaryPlane::XMax) {
          op.outlet_coeff[static_cast<std::size_t>(a)] += q;
        } else {
          op.other_out_coeff[static_cast<std::size_t>(a)] += q;
        }
      }
      continue;
    }
    const auto b = static_cast<Eigen::Index>(f.cell_b);
    if (q > 0.0) {
      trip.emplace_back(a, a, q);
      trip.emplace_back(b, a, -q);
    } else if (q < 0.0) {
      trip.emplace_back(b, b, -q);
      trip.emplace_back(a, b, q);
    }
    if (params.diffusion > 0.0) {
      const double pa = props[static_cast<std::size_t>(f.cell_a)].phi;
      const double pb = props[static_cast<std::size_t>(f.cell_b)].phi;
      const double t = params.diffusion * f.area / (f.d_a / pa + f.d_b / pb);
      trip.emplace_back(a, a, t);
      trip.emplace_back(b, b, t);
      trip.emplace_back(a, b, -t);
      trip.emplace_back(b, a, -t);
    }
  }
  const auto ni = static_cast<Eigen::Index>(n);
  op.transport.resize(ni, ni);
  op.transport.setFromTriplets(trip.begin(), trip.end());
  op.transport.makeCompressed();
  return op;
}

double TransportState::in_domain_mass(const TransportOperator& op) const {
  double m = 0.0;
  for (std::size_t i = 0; i < concentration.size(); ++i) m += op.storage[i] * concentration[i];
  return mass_scale * m;
}

TransportState make_transport_state(std::vector<double> concentration, const TransportOperator& op,
                                    double injected_mass) {
  TransportState s;
  s.concentration = std::move(concentration);
  double raw = 0.0;
  for (std::size_t i = 0; i < s.concentration.size(); ++i) raw += op.storage[i] * s.concentration[i];
  s.mass_scale = raw > 0.0 ? injected_mass / raw : 1.0;
  return s;
}

namespace {

constexpr double kNegativeTolerance = 1e-12;  // relative to max |C|

bool has_negative(const Eigen::VectorXd& c) {
  const double cmax = c.cwiseAbs().maxCoeff();
  return c.minCoeff() < -kNegativeTolerance * cmax;
}

// The step matrix is an M-matrix, so an exact solve keeps C >= 0; iterative
// solutions that violate this fall back to the direct solver.
Eigen::VectorXd solve_step(const Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& rhs,
                           const Eigen::VectorXd& guess) {
  constexpr double kTol = 1e-13;
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
  solver.preconditioner().setDroptol(1e-6);
  solver.setTolerance(kTol);
  solver.setMaxIterations(2000);
  solver.compute(m);
  Eigen::VectorXd x;
  if (solver.info() == Eigen::Success) {
    x = solver.solveWithGuess(rhs, guess);
    const double bn = rhs.norm();
    if (solver.info() == Eigen::Success && (bn == 0.0 || (rhs - m * x).norm() <= 10.0 * kTol * bn) &&
        !has_negative(x)) {
      return x;
    }
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw SolverError("transport step factorization failed", 1.0);
  x = lu.solve(rhs);
  const double bn = rhs.norm();
  const double res = bn > 0.0 ? (rhs - m * x).norm() / bn : 0.0;
  if (!(res <= 1e-10)) throw SolverError("transport step did not converge", res);
  return x;
}

}  // namespace

void step_transport(TransportState& state, const TransportOperator& op, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const auto n = static_cast<Eigen::Index>(op.storage.size());
  Eigen::SparseMatrix<double> m = op.transport;
  Eigen::VectorXd rhs(n);
  Eigen::VectorXd guess(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = op.storage[static_cast<std::size_t>(i)];
    m.coeffRef(i, i) += s / dt + op.decay * s;
    rhs[i] = s * state.concentration[static_cast<std::size_t>(i)] / dt;
    guess[i] = state.concentration[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = solve_step(m, rhs, guess);

  double outlet = 0.0, other = 0.0, decayed = 0.0, cmax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    outlet += op.outlet_coeff[k] * c[i];
    other += op.other_out_coeff[k] * c[i];
    decayed += op.decay * op.storage[k] * c[i];
    cmax = std::max(cmax, std::abs(c[i]));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (c[i] < -kNegativeTolerance * cmax) ++state.negative_flags;
  }
  state.concentration.assign(c.data(), c.data() + n);
  state.outlet_mass += state.mass_scale * dt * outlet;
  state.other_outflow_mass += state.mass_scale * dt * other;
  state.decayed_mass += state.mass_scale * dt * decayed;
  state.time += dt;
}

double outlet_rate(const TransportState& state, const TransportOperator& op) {
  double r = 0.0;
  for (std::size_t i = 0; i < op.outlet_coeff.size(); ++i) r += op.outlet_coeff[i] * state.concentration[i];
  return state.mass_scale * r;
}

std::vector<double> OutputSchedule::times_years() const {
  if (!(t_first_years > 0.0 && t_end_years > t_first_years && per_decade > 0)) {
    throw std::invalid_argument("invalid output schedule");
  }
  std::vector<double> out;
  const double l0 = std::log10(t_first_years);
  const double l1 = std::log10(t_end_years);
  const int count = static_cast<int>(std::ceil((l1 - l0) * per_decade - 1e-9));
  for (int i = 0; i <= count; ++i) {
    out.push_back(std::min(t_end_years, std::pow(10.0, l0 + static_cast<double>(i) / per_decade)));
  }
  out.back() = t_end_years;
  return out;
}

TransportResult run_transport(const OctreeMesh& mesh, std::span<const CellProperties> props,
                              const FlowField& flow, const TracerParams& params,
                              const OutputSchedule& schedule) {
  const TransportOperator op = build_transport_operator(mesh, props, flow, params);
  TransportState state =
      make_transport_state(initialize_pulse(mesh, props, params.injected_mass), op, params.injected_mass);

  TransportResult result;
  auto& btc = result.btc;
  btc.injected_mass = params.injected_mass;
  const auto outputs = schedule.times_years();
  double dt_nominal = schedule.dt_initial_years * kSecondsPerYear;
  const double dt_cap = schedule.dt_max_years * kSecondsPerYear;
  for (double t_out_years : outputs) {
    const double t_out = t_out_years * kSecondsPerYear;
    while (state.time < t_out * (1.0 - 1e-12)) {
      const double dt = std::min({dt_nominal, t_out - state.time, dt_cap});
      step_transport(state, op, dt);
      ++result.steps;
      if (dt >= dt_nominal * (1.0 - 1e-12)) dt_nominal *= schedule.growth;
    }
    btc.times.push_back(t_out_years);
    btc.mass_rate.push_back(outlet_rate(state, op) * kSecondsPerYear);
    btc.cumulative.push_back(state.outlet_mass);
    btc.in_domain.push_back(state.in_domain_mass(op));
    btc.decayed.push_back(state.decayed_mass);
  }
  result.final_in_domain = state.in_domain_mass(op);
  result.outlet_mass = state.outlet_mass;
  result.other_outflow_mass = state.other_outflow_mass;
  result.decayed_mass = state.decayed_mass;
  result.negative_flags = state.negative_flags;
  if (state.negative_flags > 0) {
    std::clog << "udfm: warning: " << state.negative_flags << " negative concentrations flagged\n";
  }
  return result;
}

std::size_t peak_index(const BreakthroughCurve& btc) {
  if (btc.mass_rate.empty()) throw std::invalid_argument("empty breakthrough curve");
  const auto it = std::max_element(btc.mass_rate.begin(), btc.mass_rate.end());
  const auto lo = std::min_element(btc.mass_rate.begin(), btc.mass_rate.end());
  if (!(*it > 0.0) || *it == *lo) throw std::invalid_argument("breakthrough curve has no peak");
  return static_cast<std::size_t>(it - btc.mass_rate.begin());
}

double peak_time(const BreakthroughCurve& btc) {
  const std::size_t i = peak_index(btc);
  if (i == 0 || i + 1 >= btc.size()) return btc.times[i];
  const double x0 = std::log(btc.times[i - 1]);
  const double x1 = std::log(btc.times[i]);
  const double x2 = std::log(btc.times[i + 1]);
  const double y0 = btc.mass_rate[i - 1];
  const double y1 = btc.mass_rate[i];
  const double y2 = btc.mass_rate[i + 1];
  const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
  const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
  const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
  if (!(a < 0.0)) return btc.times[i];
  const double xv = std::clamp(-b / (2.0 * a), x0, x2);
  return std::exp(xv);
}

BreakthroughCurve normalize_btc(const BreakthroughCurve& btc, const BreakthroughCurve& reference) {
  const double t_ref = btc.times.empty() ? 1.0 : reference.times[peak_index(reference)];
  BreakthroughCurve out = btc;
  out.normalized_time.resize(btc.size());
  out.normalized_rate.resize(btc.size());
  for (std::size_t i = 0; i < btc.size(); ++i) {
    out.normalized_time[i] = btc.times[i] / t_ref;
    out.normalized_rate[i] = btc.mass_rate[i] / btc.injected_mass;
  }
  return out;
}

std::vector<std::size_t> find_peaks(const BreakthroughCurve& btc, double min_relative_height) {
  std::vector<std::size_t> peaks;
  if (btc.size() < 3) return peaks;
  const double top = *std::max_element(btc.mass_rate.begin(), btc.mass_rate.end());
  if (!(top > 0.0)) return peaks;
  for (std::size_t i = 1; i + 1 < btc.size(); ++i) {
    const double r = btc.mass_rate[i];
    if (r > btc.mass_rate[i - 1] && r >= btc.mass_rate[i + 1] && r >= min_relative_height * top) {
      peaks.push_back(i);
    }
  }
  return peaks;
}

bool has_early_peak(const BreakthroughCurve& btc, double reference_time, double fraction,
                    double min_relative_height) {
  for (std::size_t i : find_peaks(btc, min_relative_height)) {
    if (btc.times[i] < fraction * reference_time) return true;
  }
  return false;
}

}  // namespace udfm
