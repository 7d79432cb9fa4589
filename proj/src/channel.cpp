// SPDX-License-Identifier: Apache-2.0

#include "beamsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace beamsim {

namespace {

// A wall is the plane coord[axis] == value; the room is convex, so an image
// path is valid iff every reflection point lies on its wall face.
struct Wall {
  int axis;
  double value;
};

arma::vec3 mirror(const arma::vec3& p, const Wall& w) {
  arma::vec3 out = p;
  out[w.axis] = 2.0 * w.value - p[w.axis];
  return out;
}

ArrayAngles angles_in_frame(const arma::vec3& global_dir, const Pose& pose) {
  return dir_to_array_angles(global_to_local(global_dir, pose));
}

// Folds the unfolded straight segment back into the room, checking that each
// bounce point lies strictly inside the segment and on its wall face.
// `images[i]` is the AP mirrored through the first i+1 walls. On success the
// departure point next to the AP is written to `first_bounce`.
bool fold_back(const Room& room, const arma::vec3& ut, const std::vector<Wall>& walls,
               const std::vector<arma::vec3>& images, arma::vec3* first_bounce) {
  const double dims[3] = {room.width, room.length, room.height};
  arma::vec3 cur = ut;
  for (int i = static_cast<int>(walls.size()) - 1; i >= 0; --i) {
    const Wall& w = walls[static_cast<size_t>(i)];
    const arma::vec3& img = images[static_cast<size_t>(i)];
    const double denom = img[w.axis] - cur[w.axis];
    if (std::abs(denom) < 1e-12) return false;  // segment parallel to wall
    const double t = (w.value - cur[w.axis]) / denom;
    if (t <= 1e-12 || t >= 1.0 - 1e-12) return false;
    arma::vec3 q = cur + t * (img - cur);
    q[w.axis] = w.value;
    for (int a = 0; a < 3; ++a) {
      if (a == w.axis) continue;
      if (q[a] < -1e-9 || q[a] > dims[a] + 1e-9) return false;
    }
    cur = q;
  }
  *first_bounce = cur;
  return true;
}

double path_phase(double length, double wavelength) {
  double ph = std::fmod(-2.0 * M_PI * length / wavelength, 2.0 * M_PI);
  if (ph < 0.0) ph += 2.0 * M_PI;
  return ph;
}

}  // namespace

std::vector<PropagationPath> trace_paths(const Room& room, const Pose& ut_pose, int max_order) {
  if (max_order < 0 || max_order > 2)
    throw std::invalid_argument("trace_paths: max_order must be in {0, 1, 2}");
  const arma::vec3 ap = room.ap_pose.position;
  const arma::vec3 ut = ut_pose.position;
  const double los_dist = arma::norm(ut - ap);
  if (los_dist < 1e-9) throw std::invalid_argument("trace_paths: UT coincides with AP");

  const Wall walls[6] = {{0, 0.0},         {0, room.width}, {1, 0.0},
                         {1, room.length}, {2, 0.0},        {2, room.height}};
  const double lam = room.wavelength;
  const double gamma = room.reflection_coeff;

  std::vector<PropagationPath> out;

  auto add_path = [&](int order, double length, const arma::vec3& dep_dir,
                      const arma::vec3& arr_dir) {
    const double amp = lam / (4.0 * M_PI * length);
    const double rho = amp * amp * std::pow(gamma, 2.0 * order);
    if (rho <= 0.0) return;
    PropagationPath p;
    p.order = order;
    p.length = length;
    p.power = rho;
    p.phase = path_phase(length, lam);
    p.aod = angles_in_frame(dep_dir, room.ap_pose);
    p.aoa = angles_in_frame(arr_dir, ut_pose);
    out.push_back(p);
  };

  // LOS
  add_path(0, los_dist, (ut - ap) / los_dist, (ap - ut) / los_dist);

  // Reflections: ordered wall sequences without immediate repetition.
  std::vector<std::vector<Wall>> sequences;
  if (max_order >= 1)
    for (const Wall& w : walls) sequences.push_back({w});
  if (max_order >= 2)
    for (const Wall& w1 : walls)
      for (const Wall& w2 : walls) {
        if (w1.axis == w2.axis && w1.value == w2.value) continue;
        sequences.push_back({w1, w2});
      }

  for (const auto& seq : sequences) {
    std::vector<arma::vec3> images;
    arma::vec3 img = ap;
    for (const Wall& w : seq) {
      img = mirror(img, w);
      images.push_back(img);
    }
    const arma::vec3& apparent = images.back();
    const double length = arma::norm(ut - apparent);
    if (length < 1e-9) continue;
    arma::vec3 first_bounce;
    if (!fold_back(room, ut, seq, images, &first_bounce)) continue;
    const arma::vec3 dep = (first_bounce - ap) / arma::norm(first_bounce - ap);
    const arma::vec3 arr = (apparent - ut) / length;
    add_path(static_cast<int>(seq.size()), length, dep, arr);
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const PropagationPath& a, const PropagationPath& b) {
                     return a.power > b.power;
                   });
  if (out.size() > kMaxPathsPerSample) out.resize(kMaxPathsPerSample);
  return out;
}

std::vector<PropagationPath> apply_blockage(const std::vector<PropagationPath>& paths,
                                            const BlockageConfig& cfg, Rng& rng) {
  if (paths.empty()) throw std::invalid_argument("apply_blockage: empty path list");

  std::vector<PropagationPath> kept;
  for (const auto& p : paths) {
    double p_block = 0.0;
    if (p.order == 0) {
      p_block = cfg.p_los;
    } else if (static_cast<size_t>(p.order - 1) < cfg.p_order.size()) {
      p_block = cfg.p_order[static_cast<size_t>(p.order - 1)];
    }
    if (rng.uniform() >= p_block) kept.push_back(p);
  }
  if (!kept.empty()) return kept;

  // All drawn blocked: keep the strongest NLOS path, or the LOS when the
  // input has no NLOS path at all. Input is sorted by descending power.
  for (const auto& p : paths)
    if (p.order > 0) return {p};
  return {paths.front()};
}

arma::cx_vec array_response(const ArrayDims& n, const ArrayAngles& angles) {
  if (n.horizontal < 1 || n.vertical < 1)
    throw std::invalid_argument("array_response: array dims must be >= 1");
  const double ch = std::sin(angles.elevation) * std::cos(angles.azimuth);
  const double cv = std::cos(angles.elevation);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n.count()));
  arma::cx_vec a(static_cast<arma::uword>(n.count()));
  for (int v = 0; v < n.vertical; ++v)
    for (int h = 0; h < n.horizontal; ++h)
      a[static_cast<arma::uword>(v * n.horizontal + h)] =
          scale * std::exp(std::complex<double>(0.0, M_PI * (h * ch + v * cv)));
  return a;
}

arma::cx_mat assemble_channel(const std::vector<PropagationPath>& paths, const ArrayDims& n_ut,
                              const ArrayDims& n_ap) {
  if (paths.empty()) throw std::invalid_argument("assemble_channel: empty path list");
  arma::cx_mat h(static_cast<arma::uword>(n_ut.count()), static_cast<arma::uword>(n_ap.count()),
                 arma::fill::zeros);
  for (const auto& p : paths) {
    const std::complex<double> coeff =
        std::sqrt(p.power) * std::exp(std::complex<double>(0.0, p.phase));
    h += coeff * (array_response(n_ut, p.aoa) * array_response(n_ap, p.aod).t());
  }
  return h;
}

}  // namespace beamsim
