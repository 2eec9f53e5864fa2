#include "udfm/network.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

namespace udfm {

void GenerationParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(r0 > 0.0 && r0 < ru)) throw std::invalid_argument("radius cutoffs must satisfy 0 < r0 < ru");
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be non-negative");
  if (!(L > 0.0)) throw std::invalid_argument("domain edge L must be positive");
  if (!(buffer >= 0.0)) throw std::invalid_argument("buffer must be non-negative");
  if (n_fractures < 0) throw std::invalid_argument("n_fractures must be non-negative");
  if (std::abs(mean_dir.norm() - 1.0) > 1e-12) throw std::invalid_argument("mean_dir must be a unit vector");
  if (polygon_vertices < 8) throw std::invalid_argument("polygon_vertices must be at least 8");
}

double sample_radius(double u, const GenerationParams& p) {
  const double tail = 1.0 - std::pow(p.ru / p.r0, -p.alpha);
  const double r = p.r0 * std::pow(1.0 - u * tail, -1.0 / p.alpha);
  return std::clamp(r, p.r0, p.ru);
}

Vec3 sample_orientation(CounterRng& rng, double kappa, const Vec3& mean_dir) {
  const double u = rng.uniform();
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  // Cosine of the polar angle about mean_dir, inverse CDF evaluated at
  // 1 - u so the log argument stays positive for large kappa.
  double w;
  if (kappa == 0.0) {
    w = 1.0 - 2.0 * u;
  } else {
    w = 1.0 + std::log1p(u * std::expm1(-2.0 * kappa)) / kappa;
  }
  w = std::clamp(w, -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
  const auto [e1, e2] = plane_basis(mean_dir);
  Vec3 n = w * mean_dir + s * (std::cos(phi) * e1 + std::sin(phi) * e2);
  return n.normalized();
}

double aperture_from_radius(double r) { return 5.0e-4 * std::sqrt(r); }

FractureNetwork generate_network(const GenerationParams& params) {
  params.validate();
  FractureNetwork net;
  net.params = params;
  net.domain = Box::cube(params.L);
  const Box expanded = Box::cube(params.L + 2.0 * params.buffer);
  const Vec3 edge = expanded.extent();

  const std::int64_t cap =
      params.max_attempts > 0 ? params.max_attempts : 100 * params.n_fractures + 1000;
  const CounterRng master(params.seed);

  std::int64_t attempts = 0;
  std::int64_t counted = 0;
  while (counted < params.n_fractures) {
    if (attempts >= cap) {
      throw GenerationError("fracture placement exceeded " + std::to_string(cap) +
                            " attempts with " + std::to_string(counted) + " accepted");
    }
    CounterRng s = master.split(static_cast<std::uint64_t>(attempts++));
    Fracture f;
    for (int k = 0; k < 3; ++k) f.center[k] = expanded.min[k] + s.uniform() * edge[k];
    f.radius = sample_radius(s.uniform(), params);
    f.normal = sample_orientation(s, params.kappa, params.mean_dir);
    f.aperture = aperture_from_radius(f.radius);

    const bool touches =
        polygon_intersects_box(disc_to_polygon(f, params.polygon_vertices), net.domain);
    if (params.count_in_expanded_domain) ++counted;
    if (!touches) continue;
    if (!params.count_in_expanded_domain) ++counted;
    f.id = static_cast<int>(net.fractures.size());
    net.fractures.push_back(f);
  }
  return net;
}

double mean_percolation_length(const GenerationParams& p, double L) {
  const double cut = p.alpha * L;
  const double norm = 1.0 - std::pow(p.ru / p.r0, -p.alpha);
  if (cut >= p.ru) {
    // Closed-form first moment of the truncated power law.
    const double x = p.ru / p.r0;
    if (std::abs(p.alpha - 1.0) < 1e-12) return p.r0 * std::log(x) / norm;
    return p.alpha / (p.alpha - 1.0) * p.r0 * (1.0 - std::pow(x, 1.0 - p.alpha)) / norm;
  }
  auto density = [&](double r) {
    return p.alpha / p.r0 * std::pow(r / p.r0, -1.0 - p.alpha) / norm;
  };
  auto integrand = [&](double r) { return std::min(r, cut) * density(r); };
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  if (cut > p.r0) total += gauss_kronrod<double, 31>::integrate(integrand, p.r0, cut, 15, 1e-12);
  total += gauss_kronrod<double, 31>::integrate(integrand, std::max(p.r0, cut), p.ru, 15, 1e-12);
  return total;
}

double percolation_parameter(std::int64_t n, const GenerationParams& params, double L) {
  return static_cast<double>(n) / (L * L) * mean_percolation_length(params, L);
}

std::int64_t CriticalCountPin::at(double L) const {
  const double scale = (L / reference_length) * (L / reference_length);
  return static_cast<std::int64_t>(std::llround(static_cast<double>(count) * scale));
}

std::int64_t critical_fracture_count(const GenerationParams& params, double L,
                                     const std::optional<CriticalCountPin>& pin) {
  if (pin) return pin->at(L);
  // p >= 1 up to rounding, so an exact inversion like L^2 / E[r] = 100 gives 100.
  constexpr double kOne = 1.0 - 1e-12;
  const double per_fracture = percolation_parameter(1, params, L);
  auto n = static_cast<std::int64_t>(std::ceil(kOne / per_fracture));
  while (n > 0 && percolation_parameter(n - 1, params, L) >= kOne) --n;
  while (percolation_parameter(n, params, L) < kOne) ++n;
  return n;
}

std::int64_t fractures_for_density(double p_prime, std::int64_t critical_count) {
  return static_cast<std::int64_t>(std::llround(p_prime * static_cast<double>(critical_count)));
}

double fracture_intensity(const FractureNetwork& network, const Box& domain,
                          const IntensityOptions& options) {
  double area = 0.0;
  for (const auto& f : network.fractures) {
    area += clipped_area(disc_to_polygon(f, options.polygon_vertices), domain);
  }
  if (options.double_sided_area) area *= 2.0;
  return area / domain.volume();
}

}  // namespace udfm
