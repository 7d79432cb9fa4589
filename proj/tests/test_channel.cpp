// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "beamsim/channel.hpp"
#include "beamsim/codebook.hpp"
#include "beamsim/rng.hpp"

using namespace beamsim;

namespace {

Room living_room() {
  Room r;
  r.width = 7.0;
  r.length = 7.0;
  r.height = 3.0;
  r.ap_pose.position = {7.0, 3.5, 1.5};
  r.ap_pose.orientation = {M_PI, 0.0, 0.0};
  r.grid_min = {1.5, 0.0, 1.5};
  r.grid_max = {5.5, 7.0, 1.5};
  r.wavelength = 0.005;
  r.reflection_coeff = 0.3;
  return r;
}

Pose center_ut() {
  Pose p;
  p.position = {3.5, 3.5, 1.5};
  return p;
}

double friis(double wavelength, double d) {
  const double a = wavelength / (4.0 * M_PI * d);
  return a * a;
}

}  // namespace

TEST_CASE("zero reflection coefficient leaves exactly the Friis LOS path") {
  Room room = living_room();
  room.reflection_coeff = 0.0;
  auto paths = trace_paths(room, center_ut(), 2);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].order == 0);
  CHECK(paths[0].length == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(paths[0].power == doctest::Approx(friis(room.wavelength, 3.5)).epsilon(1e-12));
}

TEST_CASE("mirror-image geometry of the LR scenario") {
  Room room = living_room();
  auto paths = trace_paths(room, center_ut(), 1);

  REQUIRE(!paths.empty());
  CHECK(paths[0].order == 0);
  CHECK(paths[0].length == doctest::Approx(3.5).epsilon(1e-12));

  // Ceiling (z = 3) image of the AP is (7, 3.5, 4.5): length sqrt(3.5^2 + 3^2).
  const double ceiling_len = std::sqrt(3.5 * 3.5 + 3.0 * 3.0);
  bool found = false;
  for (const auto& p : paths)
    if (p.order == 1 && std::abs(p.length - ceiling_len) < 1e-9) found = true;
  CHECK(found);

  for (const auto& p : paths) {
    if (p.order == 0) continue;
    CHECK(p.power == doctest::Approx(friis(room.wavelength, p.length) * 0.09).epsilon(1e-12));
    const double expect_phase = std::fmod(2.0 * M_PI - std::fmod(2.0 * M_PI * p.length / room.wavelength, 2.0 * M_PI), 2.0 * M_PI);
    CHECK(p.phase == doctest::Approx(expect_phase).epsilon(1e-6));
  }
}

TEST_CASE("path counts stay within the image-method combinatorics") {
  Room room = living_room();
  Pose ut;
  ut.position = {2.0, 1.0, 1.5};

  auto order1 = trace_paths(room, ut, 1);
  // <= 1 + 6 first-order images; AP sits on the x=7 wall so that image degenerates
  CHECK(order1.size() <= 7);
  CHECK(order1.size() >= 5);

  auto order2 = trace_paths(room, ut, 2);
  CHECK(order2.size() <= kMaxPathsPerSample);  // 1 + 6 + 30, then truncation

  // sorted by descending power
  for (size_t i = 1; i < order2.size(); ++i) CHECK(order2[i - 1].power >= order2[i].power);
  for (const auto& p : order2) CHECK(p.power > 0.0);

  // an interior AP sees more than 25 valid images, so truncation bites exactly
  Room interior = room;
  interior.ap_pose.position = {5.0, 3.5, 1.5};
  CHECK(trace_paths(interior, ut, 2).size() == kMaxPathsPerSample);
}

TEST_CASE("UT coincident with the AP is rejected") {
  Room room = living_room();
  Pose ut;
  ut.position = room.ap_pose.position;
  CHECK_THROWS_AS(trace_paths(room, ut, 1), std::invalid_argument);
}

TEST_CASE("blockage keeps everything at zero probabilities and drops LOS at one") {
  Room room = living_room();
  auto paths = trace_paths(room, center_ut(), 2);

  BlockageConfig none;
  none.p_order = {0.0, 0.0};
  Rng rng(1);
  auto kept = apply_blockage(paths, none, rng);
  CHECK(kept.size() == paths.size());

  BlockageConfig los_only;
  los_only.p_los = 1.0;
  los_only.p_order = {0.0, 0.0};
  Rng rng2(2);
  auto no_los = apply_blockage(paths, los_only, rng2);
  CHECK(no_los.size() == paths.size() - 1);
  for (const auto& p : no_los) CHECK(p.order > 0);
}

TEST_CASE("LOS survives a fair coin at the expected rate") {
  Room room = living_room();
  auto paths = trace_paths(room, center_ut(), 1);
  BlockageConfig cfg;
  cfg.p_los = 0.5;
  Rng rng(123);
  int present = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    auto kept = apply_blockage(paths, cfg, rng);
    present += std::any_of(kept.begin(), kept.end(),
                           [](const PropagationPath& p) { return p.order == 0; });
  }
  const double rate = static_cast<double>(present) / trials;
  CHECK(rate > 0.48);
  CHECK(rate < 0.52);
}

TEST_CASE("at least one path always survives") {
  Room room = living_room();
  auto paths = trace_paths(room, center_ut(), 2);
  BlockageConfig all;
  all.p_los = 1.0;
  all.p_order = {1.0, 1.0};
  Rng rng(5);
  auto kept = apply_blockage(paths, all, rng);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].order > 0);  // strongest NLOS fallback

  // with no NLOS available the LOS is retained instead
  Room bare = living_room();
  bare.reflection_coeff = 0.0;
  auto los_only = trace_paths(bare, center_ut(), 2);
  auto kept2 = apply_blockage(los_only, all, rng);
  REQUIRE(kept2.size() == 1);
  CHECK(kept2[0].order == 0);
}

TEST_CASE("array response basics") {
  CHECK(array_response({1, 1}, {0.0, M_PI / 2}).n_elem == 1);
  CHECK(std::abs(array_response({1, 1}, {0.3, 1.2})[0] - std::complex<double>(1.0, 0.0)) < 1e-15);

  // broadside 2x1: sin(t)cos(p) = 0
  arma::cx_vec a = array_response({2, 1}, {M_PI / 2, M_PI / 2});
  CHECK(std::abs(a[0] - std::complex<double>(1.0 / std::sqrt(2.0), 0)) < 1e-12);
  CHECK(std::abs(a[1] - std::complex<double>(1.0 / std::sqrt(2.0), 0)) < 1e-12);

  // 2x2 at theta = pi/2, phi = 0: horizontal phase pi, vertical phase 0
  arma::cx_vec b = array_response({2, 2}, {0.0, M_PI / 2});
  CHECK(std::abs(b[0] - std::complex<double>(0.5, 0)) < 1e-12);
  CHECK(std::abs(b[1] - std::complex<double>(-0.5, 0)) < 1e-12);
  CHECK(std::abs(b[2] - std::complex<double>(0.5, 0)) < 1e-12);
  CHECK(std::abs(b[3] - std::complex<double>(-0.5, 0)) < 1e-12);
}

TEST_CASE("array responses are unit norm") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    ArrayAngles ang{rng.uniform(-M_PI, M_PI), rng.uniform(0, M_PI)};
    for (int nh : {1, 2, 4, 16})
      for (int nv : {1, 3, 16})
        CHECK(std::abs(arma::norm(array_response({nh, nv}, ang)) - 1.0) < 1e-12);
  }
}

TEST_CASE("single-path channels are rank one and scalar channels match") {
  PropagationPath p;
  p.order = 0;
  p.power = 0.25;
  p.phase = 1.0;
  p.length = 1.0;
  p.aod = {0.2, 1.3};
  p.aoa = {-0.7, 2.0};

  arma::cx_mat h1 = assemble_channel({p}, {1, 1}, {1, 1});
  CHECK(std::abs(h1(0, 0) - 0.5 * std::exp(std::complex<double>(0, 1.0))) < 1e-12);

  arma::cx_mat h = assemble_channel({p}, {4, 4}, {8, 8});
  CHECK(h.n_rows == 16);
  CHECK(h.n_cols == 64);
  CHECK(arma::rank(h) == 1);
}

TEST_CASE("assemble_channel is linear in the path list") {
  Room room = living_room();
  auto paths = trace_paths(room, center_ut(), 2);
  REQUIRE(paths.size() >= 3);
  std::vector<PropagationPath> first(paths.begin(), paths.begin() + 2);
  std::vector<PropagationPath> second(paths.begin() + 2, paths.end());

  arma::cx_mat sum = assemble_channel(first, {4, 4}, {8, 8}) + assemble_channel(second, {4, 4}, {8, 8});
  arma::cx_mat whole = assemble_channel(paths, {4, 4}, {8, 8});
  CHECK(arma::abs(whole - sum).max() < 1e-12);
}

TEST_CASE("noiseless LOS channel picks the beamspace-nearest codebook pair") {
  // With the orthonormal DFT codebook, the gain argmax of a rank-one channel
  // is the pair nearest the LOS angles in direction-cosine space.
  Room room = living_room();
  room.reflection_coeff = 0.0;
  Codebook cb_ap = dft_codebook(8, 8);
  Codebook cb_ut = dft_codebook(4, 4);

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Pose ut;
    ut.position = {rng.uniform(1.5, 5.5), rng.uniform(0.0, 7.0), 1.5};
    ut.orientation = {rng.uniform(-M_PI, M_PI), rng.uniform(-M_PI / 4, M_PI / 4),
                      rng.uniform(-M_PI / 4, M_PI / 4)};
    auto paths = trace_paths(room, ut, 2);
    REQUIRE(paths.size() == 1);
    arma::cx_mat h = assemble_channel(paths, {4, 4}, {8, 8});
    GainMatrix g = gain_matrix(h, cb_ap, cb_ut, 1.0, 1.0);

    // independent oracle: nearest grid point per direction cosine, with the
    // wrap-around metric (the DFT kernel aliases at cosine distance 2)
    auto nearest = [](int n, double c) {
      int best = 0;
      double bd = 1e9;
      for (int k = 1; k <= n; ++k) {
        const double gc = (2.0 * k - 1.0 - n) / n;
        const double d = std::min(std::abs(gc - c), 2.0 - std::abs(gc - c));
        if (d < bd) {
          bd = d;
          best = k - 1;
        }
      }
      return best;
    };
    const ArrayAngles& aod = paths[0].aod;
    const ArrayAngles& aoa = paths[0].aoa;
    const int p = nearest(8, std::sin(aod.elevation) * std::cos(aod.azimuth));
    const int q = nearest(8, std::cos(aod.elevation));
    const int m = nearest(4, std::sin(aoa.elevation) * std::cos(aoa.azimuth));
    const int n = nearest(4, std::cos(aoa.elevation));

    const int expect = cb_ap.flatten(p, q) * 16 + cb_ut.flatten(m, n);
    CHECK(argmax_pair(g) == expect);
  }
}
