#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace udfm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-aligned box, min < max componentwise.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double volume() const { return extent().prod(); }
  bool valid() const { return (min.array() < max.array()).all(); }

  static Box cube(double edge) {
    const double h = 0.5 * edge;
    return {Vec3(-h, -h, -h), Vec3(h, h, h)};
  }
};

/// Planar circular fracture.
struct Fracture {
  int id = 0;
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // unit
  double radius = 1.0;          // m
  double aperture = 5.0e-4;     // m

  bool operator==(const Fracture&) const = default;
};

}  // namespace udfm
