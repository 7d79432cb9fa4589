// SPDX-License-Identifier: Apache-2.0

#include "beamsim/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace beamsim {

arma::mat33 rotation_matrix(double alpha, double beta, double gamma) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma))
    throw std::invalid_argument("rotation_matrix: non-finite angle");

  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);

  arma::mat33 rz = {{ca, -sa, 0.0}, {sa, ca, 0.0}, {0.0, 0.0, 1.0}};
  arma::mat33 ry = {{cb, 0.0, sb}, {0.0, 1.0, 0.0}, {-sb, 0.0, cb}};
  arma::mat33 rx = {{1.0, 0.0, 0.0}, {0.0, cg, -sg}, {0.0, sg, cg}};
  return rz * ry * rx;
}

static void check_unit(const arma::vec3& d, const char* who) {
  if (std::abs(arma::norm(d) - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(who) + ": direction must be unit-norm");
}

arma::vec3 global_to_local(const arma::vec3& direction, const Pose& pose) {
  check_unit(direction, "global_to_local");
  arma::mat33 r = rotation_matrix(pose.orientation[0], pose.orientation[1], pose.orientation[2]);
  return r.t() * direction;
}

arma::vec3 local_to_global(const arma::vec3& direction, const Pose& pose) {
  check_unit(direction, "local_to_global");
  arma::mat33 r = rotation_matrix(pose.orientation[0], pose.orientation[1], pose.orientation[2]);
  return r * direction;
}

ArrayAngles dir_to_array_angles(const arma::vec3& local_direction) {
  check_unit(local_direction, "dir_to_array_angles");
  const double dx = local_direction[0];
  const double dy = local_direction[1];
  const double dz = local_direction[2];

  ArrayAngles out;
  out.elevation = std::acos(std::clamp(dz, -1.0, 1.0));
  if (std::abs(dx) < 1e-15 && std::abs(dy) < 1e-15) {
    out.azimuth = 0.0;  // pole: azimuth undefined
  } else {
    out.azimuth = std::atan2(dy, dx);
    if (out.azimuth <= -M_PI) out.azimuth = M_PI;  // keep phi in (-pi, pi]
  }
  return out;
}

arma::vec3 array_angles_to_dir(const ArrayAngles& angles) {
  const double st = std::sin(angles.elevation);
  return {st * std::cos(angles.azimuth), st * std::sin(angles.azimuth),
          std::cos(angles.elevation)};
}

}  // namespace beamsim
