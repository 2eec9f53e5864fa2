#pragma once

#include <Eigen/Sparse>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "udfm/flow.hpp"
#include "udfm/octree.hpp"
#include "udfm/upscaling.hpp"

namespace udfm {

inline constexpr double kSecondsPerYear = 365.25 * 86400.0;

enum class TracerKind { Conservative, Decaying, Sorbing };

std::string to_string(TracerKind kind);
TracerKind tracer_kind_from_string(const std::string& s);

struct TracerParams {
  TracerKind kind = TracerKind::Conservative;
  double diffusion = 1e-9;      // m^2/s
  double decay = 0.0;           // 1/s
  double retardation = 1.0;     // R >= 1
  double injected_mass = 1.0;   // mol
  // Cell-wise R(phi) from a fixed distribution coefficient instead of `retardation`.
  bool cellwise_retardation = false;
  double distribution_coefficient = 0.0;  // K_D, kg/m^3
  double saturation = 1.0;
  double water_density = 1000.0;          // kg/m^3

  static TracerParams conservative();
  static TracerParams decaying(double half_life_years = 100.0);
  static TracerParams sorbing(double retardation = 4.0e3);

  void validate() const;
  bool operator==(const TracerParams&) const = default;
};

/// R = 1 + K_D / (phi s_l rho_w).
double retardation_factor(double distribution_coefficient, double porosity, double saturation,
                          double water_density);

/// Uniform concentration on cells touching x-min carrying dissolved mass M0.
std::vector<double> initialize_pulse(const OctreeMesh& mesh, std::span<const CellProperties> props,
                                     double injected_mass);

/// Backward-Euler upwind/TPFA operator on a fixed flow field.
struct TransportOperator {
  Eigen::SparseMatrix<double> transport;  // net outgoing advective + diffusive flux
  std::vector<double> storage;            // R phi v, m^3
  std::vector<double> outlet_coeff;       // x-max outflow, m^3/s
  std::vector<double> other_out_coeff;    // outflow through any other boundary
  double decay = 0.0;
};

TransportOperator build_transport_operator(const OctreeMesh& mesh,
                                           std::span<const CellProperties> props,
                                           const FlowField& flow, const TracerParams& params);

struct TransportState {
  std::vector<double> concentration;
  double time = 0.0;              // s
  double mass_scale = 1.0;        // converts sum(storage * C) to mol
  double outlet_mass = 0.0;       // mol through x-max
  double other_outflow_mass = 0.0;
  double decayed_mass = 0.0;
  int negative_flags = 0;

  double in_domain_mass(const TransportOperator& op) const;
};

/// Wraps an initial field; mass_scale makes the in-domain ledger equal `injected_mass`.
TransportState make_transport_state(std::vector<double> concentration, const TransportOperator& op,
                                    double injected_mass);

/// One implicit step of length dt (s). Throws SolverError on failure.
void step_transport(TransportState& state, const TransportOperator& op, double dt);

/// Instantaneous x-max outflow rate, mol/s.
double outlet_rate(const TransportState& state, const TransportOperator& op);

struct OutputSchedule {
  double t_first_years = 1e-4;
  double t_end_years = 1e8;
  int per_decade = 20;
  double dt_initial_years = 1e-5;
  double growth = 1.2;
  double dt_max_years = std::numeric_limits<double>::infinity();

  std::vector<double> times_years() const;
  bool operator==(const OutputSchedule&) const = default;
};

struct BreakthroughCurve {
  std::vector<double> times;         // yr
  std::vector<double> mass_rate;     // mol/yr through x-max
  std::vector<double> cumulative;    // mol through x-max
  std::vector<double> in_domain;     // mol
  std::vector<double> decayed;       // mol
  std::vector<double> normalized_time;
  std::vector<double> normalized_rate;
  double injected_mass = 1.0;

  std::size_t size() const { return times.size(); }
};

struct TransportResult {
  BreakthroughCurve btc;
  double final_in_domain = 0.0;
  double outlet_mass = 0.0;
  double other_outflow_mass = 0.0;
  double decayed_mass = 0.0;
  int steps = 0;
  int negative_flags = 0;
};

TransportResult run_transport(const OctreeMesh& mesh, std::span<const CellProperties> props,
                              const FlowField& flow, const TracerParams& params,
                              const OutputSchedule& schedule);

/// Times divided by the reference peak time, rates by M0.
BreakthroughCurve normalize_btc(const BreakthroughCurve& btc, const BreakthroughCurve& reference);

/// Index of the global rate maximum; throws if the curve has no positive peak.
std::size_t peak_index(const BreakthroughCurve& btc);

/// Peak time with a parabolic fit in log time through the three samples
/// around the global maximum.
double peak_time(const BreakthroughCurve& btc);

/// Interior local maxima whose rate is at least `min_relative_height` of the
/// global maximum.
std::vector<std::size_t> find_peaks(const BreakthroughCurve& btc, double min_relative_height = 1e-3);

/// A detected peak earlier than `fraction * reference_time`.
bool has_early_peak(const BreakthroughCurve& btc, double reference_time, double fraction = 0.1,
                    double min_relative_height = 1e-3);

}  // namespace udfm
