// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_CHANNEL_HPP
#define BEAMSIM_CHANNEL_HPP

#include <armadillo>
#include <vector>

#include "beamsim/geometry.hpp"
#include "beamsim/rng.hpp"

namespace beamsim {

// Rectangular antenna panel, half-wavelength spacing in both dimensions.
struct ArrayDims {
  int horizontal = 1;
  int vertical = 1;
  int count() const { return horizontal * vertical; }
};

// Shoebox room [0,width] x [0,length] x [0,height] with a fixed AP and an
// axis-aligned region of admissible UT positions.
struct Room {
  double width = 7.0;   // x extent, meters
  double length = 7.0;  // y extent, meters
  double height = 3.0;  // z extent, meters
  Pose ap_pose;
  arma::vec3 grid_min{arma::fill::zeros};
  arma::vec3 grid_max{arma::fill::zeros};
  double wavelength = 0.005;       // meters
  double reflection_coeff = 0.3;   // amplitude per bounce
};

// One ray between AP and UT. Angles are already in each array's local frame.
struct PropagationPath {
  int order = 0;        // reflection count, 0 = LOS
  double power = 0.0;   // rho, linear gain
  double phase = 0.0;   // vartheta, radians in [0, 2pi)
  double length = 0.0;  // meters
  ArrayAngles aod;      // AP frame
  ArrayAngles aoa;      // UT frame
};

struct BlockageConfig {
  double p_los = 0.0;
  std::vector<double> p_order;  // per reflection order, index 0 = order 1
};

inline constexpr int kMaxPathsPerSample = 25;

// Image-method rays off the 6 walls up to max_order (1 or 2), plus LOS.
// Per path: power (lambda/(4 pi d))^2 * Gamma^(2 order), phase -2 pi d/lambda
// mod 2pi. Result sorted by descending power, truncated to 25 paths.
// Throws std::invalid_argument if the UT coincides with the AP.
std::vector<PropagationPath> trace_paths(const Room& room, const Pose& ut_pose, int max_order);

// Removes the LOS with probability cfg.p_los and each order-k path with
// probability cfg.p_order[k-1] (missing entries treated as 0). If every path
// is drawn blocked the strongest NLOS path is retained (the LOS if no NLOS
// path exists). Throws on an empty input list.
std::vector<PropagationPath> apply_blockage(const std::vector<PropagationPath>& paths,
                                            const BlockageConfig& cfg, Rng& rng);

// Physical UPA response, unit norm: (1/sqrt(N)) a_E kron a_A with a_A entries
// exp(j pi h sin(theta) cos(phi)) and a_E entries exp(j pi v cos(theta)).
// Element ordering is vertical-major: index = v * N_H + h.
arma::cx_vec array_response(const ArrayDims& n, const ArrayAngles& angles);

// H = sum_l sqrt(rho_l) e^{j theta_l} a_UT a_AP^H, size N_UT x N_AP.
arma::cx_mat assemble_channel(const std::vector<PropagationPath>& paths, const ArrayDims& n_ut,
                              const ArrayDims& n_ap);

}  // namespace beamsim

#endif
