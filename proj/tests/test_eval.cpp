// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "beamsim/eval.hpp"

using namespace beamsim;

namespace {

Scenario small_scenario() {
  Scenario s;
  s.room.width = 7.0;
  s.room.length = 7.0;
  s.room.height = 3.0;
  s.room.ap_pose.position = {7.0, 3.5, 1.5};
  s.room.ap_pose.orientation = {M_PI, 0.0, 0.0};
  s.room.grid_min = {1.5, 0.0, 1.5};
  s.room.grid_max = {5.5, 7.0, 1.5};
  s.room.wavelength = 0.005;
  s.room.reflection_coeff = 0.3;
  s.ap_array = {4, 2};
  s.ut_array = {2, 2};
  s.p_ap_w = 1e-3;
  s.noise_w = 3.981e-13;
  s.blockage.p_order = {0.2, 0.4};
  return s;
}

}  // namespace

TEST_CASE("scan_candidates picks the restricted argmax") {
  RssMatrix r(2, 3);
  r.values = {5.0, 1.0, 4.0, 2.0, 9.0, 3.0};

  SUBCASE("full set gives the global argmax") {
    std::vector<std::uint32_t> all = {0, 1, 2, 3, 4, 5};
    CHECK(scan_candidates(r, all) == 4);
  }

  SUBCASE("a single candidate is chosen regardless") {
    CHECK(scan_candidates(r, {2}) == 2);
  }

  SUBCASE("matches a plain loop oracle on a random restriction") {
    std::vector<std::uint32_t> subset = {0, 2, 3, 5};
    std::uint32_t expect = subset[0];
    for (std::uint32_t c : subset)
      if (r.values[c] > r.values[expect]) expect = c;
    CHECK(scan_candidates(r, subset) == expect);
  }

  SUBCASE("ties break to the smaller index") {
    RssMatrix t(1, 3);
    t.values = {7.0, 7.0, 7.0};
    CHECK(scan_candidates(t, {2, 1}) == 1);
  }

  SUBCASE("bad inputs are rejected") {
    CHECK_THROWS_AS(scan_candidates(r, {}), std::invalid_argument);
    CHECK_THROWS_AS(scan_candidates(r, {99}), std::invalid_argument);
  }
}

TEST_CASE("misalignment probability is a plain fraction") {
  std::vector<ScanOutcome> outcomes(10);
  for (int i = 0; i < 3; ++i) outcomes[static_cast<size_t>(i)].misaligned = true;
  CHECK(misalignment_probability(outcomes) == doctest::Approx(0.3));

  for (auto& o : outcomes) o.misaligned = false;
  CHECK(misalignment_probability(outcomes) == 0.0);
  for (auto& o : outcomes) o.misaligned = true;
  CHECK(misalignment_probability(outcomes) == 1.0);
  CHECK_THROWS_AS(misalignment_probability({}), std::invalid_argument);
}

TEST_CASE("effective spectral efficiency") {
  SUBCASE("the default frame constants give a prefactor of exactly 0.9 at 20 scans") {
    CHECK(scan_prefactor(20, 20.0, 0.1) == 0.9);
    CHECK(ese(1.0, 20, 20.0, 0.1) == 0.9);  // log2(1 + 1) = 1
  }

  SUBCASE("scanning the whole frame leaves nothing") {
    CHECK(ese(100.0, 200, 20.0, 0.1) == 0.0);
  }

  SUBCASE("zero SNR carries zero rate") {
    CHECK(ese(0.0, 5, 20.0, 0.1) == 0.0);
  }

  SUBCASE("overhead beyond the frame is an error, not a clamp") {
    CHECK_THROWS_AS(ese(1.0, 201, 20.0, 0.1), std::invalid_argument);
  }

  SUBCASE("monotone decreasing in the scan count for a fixed pair") {
    double prev = ese(10.0, 1, 20.0, 0.1);
    for (int n_b : {2, 5, 20, 100}) {
      const double cur = ese(10.0, n_b, 20.0, 0.1);
      CHECK(cur < prev);
      prev = cur;
    }
  }

  SUBCASE("the default-constant prefactor is 1 - n_b/200 (to one ulp)") {
    for (int n_b = 0; n_b <= 200; ++n_b)
      CHECK(scan_prefactor(n_b, 20.0, 0.1) ==
            doctest::Approx(1.0 - n_b / 200.0).epsilon(2.3e-16));
  }
}

TEST_CASE("sweep evaluation over a synthetic dataset") {
  Scenario sc = small_scenario();
  Dataset ds = generate_dataset(sc, 120, 1, 2024);
  std::vector<int> test_idx(ds.size());
  std::iota(test_idx.begin(), test_idx.end(), 0);

  EvalSettings settings;
  settings.n_b_list = {1, 2, 4, 8, 16, 32};
  settings.t_fr = 20.0;
  settings.t_s = 0.1;
  settings.noise_salt = ds.seed ^ 0x4556414Cull;

  Rng init(7);
  MlpModel model = init_model(HeadKind::MultiTask, sc.ap_array, sc.ut_array, 2, 16,
                              scaler_from_scenario(sc), init);
  auto rows = evaluate_model(model, "DNN-MT", ds, test_idx, settings, 0, 42);
  REQUIRE(rows.size() == settings.n_b_list.size());

  SUBCASE("misalignment is non-increasing in the candidate count") {
    for (size_t k = 1; k < rows.size(); ++k)
      CHECK(rows[k].misalignment_prob <= rows[k - 1].misalignment_prob + 1e-12);
    // scanning everything never misses
    CHECK(rows.back().misalignment_prob == 0.0);
    CHECK(rows.back().n_b == 32);
  }

  SUBCASE("rows carry the aggregate metadata") {
    for (const auto& r : rows) {
      CHECK(r.method == "DNN-MT");
      CHECK(r.fold == 0);
      CHECK(r.init_seed == 42);
      CHECK(r.n_samples == ds.size());
      CHECK(r.mean_ese >= 0.0);
    }
  }

  SUBCASE("evaluation is deterministic given the salt") {
    auto again = evaluate_model(model, "DNN-MT", ds, test_idx, settings, 0, 42);
    for (size_t k = 0; k < rows.size(); ++k) {
      CHECK(rows[k].misalignment_prob == again[k].misalignment_prob);
      CHECK(rows[k].mean_ese == again[k].mean_ese);
    }
  }

  SUBCASE("an unsorted n_b list yields the same cells as the sorted one") {
    EvalSettings shuffled = settings;
    shuffled.n_b_list = {16, 1, 32, 4, 2, 8};
    auto rows_shuffled = evaluate_model(model, "DNN-MT", ds, test_idx, shuffled, 0, 42);
    for (const auto& rs : rows_shuffled) {
      bool found = false;
      for (const auto& r : rows)
        if (r.n_b == rs.n_b) {
          found = true;
          CHECK(rs.misalignment_prob == r.misalignment_prob);
          CHECK(rs.mean_ese == r.mean_ese);
        }
      CHECK(found);
    }
  }

  SUBCASE("the genie bound dominates every method pointwise") {
    auto perfect = evaluate_perfect(ds, test_idx, settings, 0);
    REQUIRE(perfect.size() == 1);
    CHECK(perfect[0].misalignment_prob == 0.0);
    CHECK(perfect[0].n_b == 0);
    for (const auto& r : rows) CHECK(perfect[0].mean_ese >= r.mean_ese - 1e-12);

    auto hbs = evaluate_hbs(ds, test_idx, settings, 0);
    REQUIRE(hbs.size() == 1);
    CHECK(perfect[0].mean_ese >= hbs[0].mean_ese - 1e-12);
  }

  SUBCASE("HBS is charged its fixed overhead") {
    auto hbs = evaluate_hbs(ds, test_idx, settings, 0);
    CHECK(hbs[0].n_b == 2 * 3 + 2 * 2);  // 2 log2(8) + 2 log2(4)
    CHECK(hbs[0].n_samples == ds.size());
  }

  SUBCASE("GIFP evaluation runs through the same scan contract") {
    GifpTable table = gifp_train(ds, 1.0, M_PI / 2.0);
    auto rows_g = evaluate_gifp(table, ds, test_idx, settings, 0);
    REQUIRE(rows_g.size() == settings.n_b_list.size());
    CHECK(rows_g.back().misalignment_prob == 0.0);
    for (size_t k = 1; k < rows_g.size(); ++k)
      CHECK(rows_g[k].misalignment_prob <= rows_g[k - 1].misalignment_prob + 1e-12);
  }
}

TEST_CASE("run_sweep stitches methods together and the CSV contract holds") {
  Scenario sc = small_scenario();
  Dataset ds = generate_dataset(sc, 60, 1, 99);
  auto folds = kfold_split(ds.size(), 3, 5);
  folds.resize(2);

  EvalSettings settings;
  settings.n_b_list = {1, 4};
  settings.noise_salt = ds.seed;

  Rng init(11);
  MethodArtifacts mt;
  mt.method = "DNN-MT";
  for (size_t f = 0; f < folds.size(); ++f) {
    std::vector<MlpModel> inits;
    for (int i = 0; i < 2; ++i)
      inits.push_back(init_model(HeadKind::MultiTask, sc.ap_array, sc.ut_array, 1, 8,
                                 scaler_from_scenario(sc), init));
    mt.models_per_fold.push_back(std::move(inits));
    mt.init_seeds_per_fold.push_back({1001 + f * 10, 1002 + f * 10});
  }
  MethodArtifacts gifp;
  gifp.method = "GIFP";
  for (size_t f = 0; f < folds.size(); ++f) {
    Dataset train_view;
    train_view.scenario = ds.scenario;
    train_view.m = ds.m;
    for (int idx : folds[f].first) train_view.samples.push_back(ds.samples[static_cast<size_t>(idx)]);
    gifp.tables_per_fold.push_back(gifp_train(train_view, 2.0, M_PI));
  }
  MethodArtifacts hbs;
  hbs.method = "HBS";
  MethodArtifacts perfect;
  perfect.method = "PERFECT";

  auto rows = run_sweep(ds, folds, settings, {mt, gifp, hbs, perfect});
  // DNN-MT: 2 folds x 2 inits x 2 n_b; GIFP: 2 x 2; HBS: 2; PERFECT: 2
  CHECK(rows.size() == 8 + 4 + 2 + 2);

  const std::string path = "tmp_sweep.csv";
  write_sweep_csv(path, rows);
  std::ifstream is(path);
  REQUIRE(is);
  std::string header;
  std::getline(is, header);
  CHECK(header == "method,fold,init_seed,n_b,misalignment_prob,mean_ese,n_samples");
  size_t line_count = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++line_count;
  CHECK(line_count == rows.size());
  is.close();

  // byte-identical on re-run with the same seeds
  auto rows2 = run_sweep(ds, folds, settings, {mt, gifp, hbs, perfect});
  const std::string path2 = "tmp_sweep2.csv";
  write_sweep_csv(path2, rows2);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::ostringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  std::remove(path.c_str());
  std::remove(path2.c_str());
}
