// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_GEOMETRY_HPP
#define BEAMSIM_GEOMETRY_HPP

#include <armadillo>

namespace beamsim {

// Position (meters, global frame) plus intrinsic z-y'-x'' Euler orientation
// (alpha, beta, gamma) in radians.
struct Pose {
  arma::vec3 position{arma::fill::zeros};
  arma::vec3 orientation{arma::fill::zeros};  // (alpha, beta, gamma)
};

// Azimuth/elevation of a direction in an array's local frame. The panel lies
// in the local xz plane: elevation theta in [0, pi] against +z, azimuth phi in
// (-pi, pi] in the xy plane.
struct ArrayAngles {
  double azimuth = 0.0;    // phi, radians
  double elevation = 0.0;  // theta, radians
};

// Rz(alpha) * Ry(beta) * Rx(gamma). Columns are the local axes expressed in
// global coordinates.
arma::mat33 rotation_matrix(double alpha, double beta, double gamma);

// R^T * direction for R = rotation_matrix(pose.orientation).
// Throws std::invalid_argument if `direction` is not unit-norm (tol 1e-9).
arma::vec3 global_to_local(const arma::vec3& direction, const Pose& pose);

arma::vec3 local_to_global(const arma::vec3& direction, const Pose& pose);

// theta = arccos(d_z), phi = atan2(d_y, d_x); at the poles (|d_z| = 1) phi is
// undefined and set to 0 by convention.
ArrayAngles dir_to_array_angles(const arma::vec3& local_direction);

// Inverse of dir_to_array_angles: (sin t cos p, sin t sin p, cos t).
arma::vec3 array_angles_to_dir(const ArrayAngles& angles);

}  // namespace beamsim

#endif
