// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_SELECTORS_HPP
#define BEAMSIM_SELECTORS_HPP

#include <armadillo>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "beamsim/dataset.hpp"

namespace beamsim {

// 6-D (x, y, z, alpha, beta, gamma) floor-quantization grid anchored at the
// user-grid minimum corner and the orientation range minima.
struct GifpGeometry {
  std::array<double, 6> origin{};
  std::array<double, 6> delta{};  // spatial bin size for dims 0-2, angular for 3-5
  std::array<int, 6> count{};

  size_t bin_count() const;
};

GifpGeometry gifp_geometry(const Scenario& s, double delta_s, double delta_a);

// Per-bin beam-pair lists ordered by frequency of being the best pair, plus a
// global fallback list covering every pair.
struct GifpTable {
  GifpGeometry geometry;
  int n_ap_beams = 0;
  int n_ut_beams = 0;
  std::vector<std::vector<std::uint32_t>> bin_lists;
  std::vector<std::uint32_t> fallback;  // full pair ordering
};

// Unique bin of a pose; out-of-range coordinates clamp to the edge bins.
size_t gifp_bin_index(const Pose& pose, const GifpGeometry& geom);

// Counts each beam pair's occurrences as the top-1 label within its bin and
// stores the descending-frequency order (ties by smaller pair index). Throws
// on an empty dataset.
GifpTable gifp_train(const Dataset& ds, double delta_s, double delta_a);

// Top n_b pairs of the pose's bin list, padded from the fallback list while
// preserving order and distinctness.
std::vector<std::uint32_t> gifp_recommend(const GifpTable& table, const Pose& pose, int n_b);

void write_gifp_table(const std::string& path, const GifpTable& table);
GifpTable read_gifp_table(const std::string& path);

// Noisy received power for an arbitrary (precoder, combiner) weight pair.
using RssOracle = std::function<double(const arma::cx_vec& precoder, const arma::cx_vec& combiner)>;

struct HbsResult {
  int ut_n_h = 1, ut_n_v = 1;  // one-based full-resolution codeword indices
  int ap_n_h = 1, ap_n_v = 1;
  std::uint32_t ap_beam = 0;  // selected DFT beam, flat index
  std::uint32_t ut_beam = 0;
  int sensed_pairs = 0;
  int feedbacks = 0;
};

// DEACT hierarchical search: the UT sweeps vertical then horizontal levels
// with the AP on a single active element, then the AP does the same with the
// UT fixed at its full-resolution codeword. Each level senses exactly two
// codewords, so sensed_pairs = 2 log2(N_UT) + 2 log2(N_AP) and one feedback
// is spent per AP level (log2 N_AP total).
HbsResult hbs_run(const RssOracle& oracle, const ArrayDims& ap, const ArrayDims& ut);

}  // namespace beamsim

#endif
