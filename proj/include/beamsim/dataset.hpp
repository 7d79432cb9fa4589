// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_DATASET_HPP
#define BEAMSIM_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "beamsim/channel.hpp"
#include "beamsim/codebook.hpp"
#include "beamsim/geometry.hpp"
#include "beamsim/rng.hpp"

namespace beamsim {

// UT orientation sampling ranges (radians), fixed across the project:
// alpha uniform on [-pi, pi), beta and gamma uniform on [-pi/4, pi/4).
inline constexpr double kAlphaHalfRange = M_PI;
inline constexpr double kBetaGammaHalfRange = M_PI / 4.0;

// Everything needed to synthesize one labeled scene.
struct Scenario {
  Room room;
  int max_reflection_order = 2;
  ArrayDims ap_array{8, 8};
  ArrayDims ut_array{4, 4};
  double p_ap_w = 1e-3;       // transmit power, watts
  double noise_w = 3.981e-12; // noise variance, watts
  BlockageConfig blockage;
  bool random_orientation = true;
};

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);
std::uint64_t scenario_hash(const Scenario& s);
// Hash with the blockage block zeroed, for "same scenario" checks between
// blocked/unblocked dataset variants.
std::uint64_t scenario_hash_ignoring_blockage(const Scenario& s);

// 0/1 matrix marking the M strongest beam pairs of one measurement.
struct LabelMatrix {
  int n_ap = 0;
  int n_ut = 0;
  std::vector<std::uint8_t> marks;  // row-major like PairMatrix

  LabelMatrix() = default;
  LabelMatrix(int ap, int ut) : n_ap(ap), n_ut(ut), marks(static_cast<size_t>(ap) * ut, 0) {}
  int sum() const;
};

// Flat pair indices of the m largest entries of r, strongest first, ties by
// smaller flat index. Throws if m is out of [1, pairs].
std::vector<std::uint32_t> rank_beam_pairs(const RssMatrix& r, int m);

LabelMatrix label_mhot(const RssMatrix& r, int m);

struct Sample {
  Pose pose;
  GainMatrix gains;    // float32-quantized, matching the file precision
  PhaseMatrix phases;  // float32-quantized
  std::uint64_t noise_seed = 0;
  std::vector<std::uint32_t> label;  // ranked pair indices, strongest first
  int m = 1;
};

struct Dataset {
  Scenario scenario;
  std::uint64_t seed = 0;
  int m = 1;
  std::vector<Sample> samples;

  size_t size() const { return samples.size(); }
};

// Uniform pose over the user grid and the orientation ranges. Consumes 3
// position draws, plus 3 orientation draws when random_orientation is set.
Pose draw_pose(const Scenario& s, Rng& rng);

// One fully synthesized sample: pose, traced + blocked channel, quantized
// beamspace response, noise seed and M-hot label. The per-sample stream is
// Rng::stream(seed, index), so generation is order- and worker-independent.
Sample generate_sample(const Scenario& s, const Codebook& cb_ap, const Codebook& cb_ut,
                       std::uint64_t seed, std::uint64_t index, int m);

Dataset generate_dataset(const Scenario& s, int n_samples, int m, std::uint64_t seed);

// Per output slot, the sample comes from d_blocked with probability p, else
// from d_unblocked. Both inputs must share the scenario (blockage aside),
// size and labeling order. The result records p as its nominal p_los.
Dataset mix_blockage(const Dataset& d_blocked, const Dataset& d_unblocked, double p,
                     std::uint64_t seed);

// Seeded permutation split into k near-equal disjoint folds; element f of the
// result holds (train, test) index lists with fold f as the test part.
std::vector<std::pair<std::vector<int>, std::vector<int>>> kfold_split(size_t n, int k,
                                                                       std::uint64_t seed);

// Gaussian perturbation of the reported pose; labels and gains untouched.
Sample perturb_ci(const Sample& sample, double sigma_p, double sigma_psi, Rng& rng);

// Applies perturb_ci to every sample with per-index streams from `seed`.
void apply_ci_perturbation(Dataset& ds, double sigma_p, double sigma_psi, std::uint64_t seed);

void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

}  // namespace beamsim

#endif
