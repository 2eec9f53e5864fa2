#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "udfm/geometry.hpp"
#include "udfm/rng.hpp"
#include "udfm/types.hpp"

namespace udfm {

/// Parameters of a single-family Poissonian disc network.
struct GenerationParams {
  double alpha = 1.8;   // power-law decay exponent
  double r0 = 1.0;      // lower radius cutoff (m)
  double ru = 10.0;     // upper radius cutoff (m)
  double kappa = 0.1;   // von Mises-Fisher concentration
  Vec3 mean_dir = Vec3::UnitZ();
  double L = 50.0;      // cubic domain edge (m)
  double buffer = 5.0;  // generation-domain expansion per side (m)
  std::int64_t n_fractures = 0;
  std::uint64_t seed = 0;

  // Generation controls.
  int polygon_vertices = kDefaultPolygonVertices;
  bool count_in_expanded_domain = false;
  std::int64_t max_attempts = 0;  // 0: 100 * n_fractures + 1000

  void validate() const;
  bool operator==(const GenerationParams&) const = default;
};

struct FractureNetwork {
  std::vector<Fracture> fractures;
  Box domain;
  GenerationParams params;

  std::size_t size() const { return fractures.size(); }
  bool empty() const { return fractures.empty(); }
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inverse CDF of the truncated power law, u in [0, 1).
double sample_radius(double u, const GenerationParams& params);

/// von Mises-Fisher direction on S^2 about `mean_dir`.
Vec3 sample_orientation(CounterRng& rng, double kappa, const Vec3& mean_dir);

/// Hydraulic aperture correlated with radius, b = 5e-4 sqrt(r).
double aperture_from_radius(double r);

FractureNetwork generate_network(const GenerationParams& params);

/// Integral of min(r, alpha L) against the radius density.
double mean_percolation_length(const GenerationParams& params, double L);

/// Percolation parameter p for `n` fractures in a domain of edge L.
double percolation_parameter(std::int64_t n, const GenerationParams& params, double L);

/// Externally pinned critical count, scaled to other domain sizes by L^2.
struct CriticalCountPin {
  std::int64_t count = 1000;
  double reference_length = 50.0;

  std::int64_t at(double L) const;
  bool operator==(const CriticalCountPin&) const = default;
};

/// Smallest N with p(N) >= 1, or the pinned value when `pin` is set.
std::int64_t critical_fracture_count(const GenerationParams& params, double L,
                                     const std::optional<CriticalCountPin>& pin = std::nullopt);

/// Fracture count realizing dimensionless density p' = p / p_c.
std::int64_t fractures_for_density(double p_prime, std::int64_t critical_count);

struct IntensityOptions {
  bool double_sided_area = false;
  int polygon_vertices = kDefaultPolygonVertices;
};

/// P32: fracture area clipped to `domain` per unit domain volume (1/m).
double fracture_intensity(const FractureNetwork& network, const Box& domain,
                          const IntensityOptions& options = {});

}  // namespace udfm
