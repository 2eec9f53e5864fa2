#pragma once

#include <algorithm>
#include <vector>

#include "udfm/network.hpp"

namespace fixtures {

inline udfm::Fracture disc(int id, udfm::Vec3 c, udfm::Vec3 n, double r) {
  return udfm::Fracture{id, c, n.normalized(), r, udfm::aperture_from_radius(r)};
}

inline udfm::FractureNetwork make_network(double L, std::vector<udfm::Fracture> fractures) {
  udfm::FractureNetwork net;
  net.domain = udfm::Box::cube(L);
  net.params.L = L;
  for (std::size_t i = 0; i < fractures.size(); ++i) fractures[i].id = static_cast<int>(i);
  net.fractures = std::move(fractures);
  return net;
}

// A touches x-min, C touches x-max, B bridges them; D floats free.
// Domain edge 10 m.
inline udfm::FractureNetwork chain(bool with_b = true, bool with_d = false) {
  std::vector<udfm::Fracture> f;
  f.push_back(disc(0, {-4.0, 0.0, 0.0}, {0, 0, 1}, 1.5));
  if (with_b) f.push_back(disc(0, {0.0, 0.0, 0.0}, {0, 1, 0}, 3.0));
  f.push_back(disc(0, {4.0, 0.0, 0.0}, {0, 0, 1}, 1.5));
  if (with_d) f.push_back(disc(0, {0.0, 4.0, 4.0}, {1, 0, 0}, 0.5));
  return make_network(10.0, f);
}

// Two parallel horizontal discs offset in x and z: neither intersects the
// other, A reaches x-min and B reaches x-max of a 25 m domain. Coarse cells
// bridge the 1.3 m vertical gap; cells of 0.625 m leave a matrix layer.
inline udfm::FractureNetwork bridged_pair() {
  return make_network(25.0, {disc(0, {-5.0, 0.0, 0.3}, {0, 0, 1}, 8.5),
                             disc(1, {5.0, 0.0, 1.6}, {0, 0, 1}, 8.5)});
}

}  // namespace fixtures
