#pragma once

#include <Eigen/Sparse>
#include <span>
#include <stdexcept>
#include <vector>

#include "udfm/octree.hpp"
#include "udfm/upscaling.hpp"

namespace udfm {

/// Pressure drop along x with no-flow lateral faces.
struct FlowBC {
  double p_in = 1.0e3;  // Pa on x-min
  double p_out = 0.0;   // Pa on x-max
  double viscosity = 8.9e-4;  // Pa s

  double pressure_drop() const { return p_in - p_out; }
  bool operator==(const FlowBC&) const = default;
};

struct SolverOptions {
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 0;    // 0: 50 sqrt(n)
  /// solve_flow applies correction solves until |Q_in - Q_out| <= balance_tolerance * |Q_in|.
  double balance_tolerance = 1e-9;

  bool operator==(const SolverOptions&) const = default;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// SPD two-point-flux system in transmissibility units (m^3); fluxes are
/// T * dp / mu.
struct TpfaSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<double> face_transmissibility;  // 0 on no-flow faces
  std::vector<double> face_boundary_pressure;  // Dirichlet value, boundary faces only
};

/// A / (d_a / k_a + d_b / k_b).
double face_transmissibility(double area, double d_a, double k_a, double d_b, double k_b);

TpfaSystem assemble_tpfa(const OctreeMesh& mesh, std::span<const CellProperties> props,
                         const FlowBC& bc);

struct PressureSolution {
  Eigen::VectorXd pressure;
  int iterations = 0;
  double residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients; throws SolverError when the
/// iteration cap is reached above tolerance.
PressureSolution solve_pressure(const TpfaSystem& system, const SolverOptions& options = {},
                                const Eigen::VectorXd* guess = nullptr);

struct FlowField {
  std::vector<double> pressure;   // Pa, per cell
  std::vector<double> face_flux;  // m^3/s, cell_a -> cell_b (outward on boundaries)
  double q_in = 0.0;              // m^3/s through x-min
  double q_out = 0.0;             // m^3/s through x-max
  double k_eff = 0.0;             // m^2
  int iterations = 0;
  double residual = 0.0;
  double k_harmonic = 0.0;        // volume-weighted harmonic mean of cell k
  double k_arithmetic = 0.0;      // volume-weighted arithmetic mean of cell k
  bool within_wiener_bounds = false;
};

/// k_eff = mu q Lx / dp with q = Q / (Ly Lz).
double effective_permeability(double inflow, const Box& domain, double pressure_drop,
                              double viscosity);

/// |(k_i - k_ref) / k_ref|.
double keff_error_factor(double k_i, double k_ref);

FlowField solve_flow(const OctreeMesh& mesh, std::span<const CellProperties> props,
                     const FlowBC& bc, const SolverOptions& options = {});

/// Largest net flux magnitude over all cells (m^3/s).
double max_cell_imbalance(const OctreeMesh& mesh, const FlowField& flow);

}  // namespace udfm
