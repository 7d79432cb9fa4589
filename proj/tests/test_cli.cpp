// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "beamsim/config.hpp"

using namespace beamsim;

namespace {

const char* kTinyConfig = R"json({
  "scenario": {
    "room": {"width": 7.0, "length": 7.0, "height": 3.0},
    "ap_position": [7.0, 3.5, 1.5],
    "ap_orientation_deg": [180.0, 0.0, 0.0],
    "user_grid_min": [1.5, 0.0, 1.5],
    "user_grid_max": [5.5, 7.0, 1.5],
    "wavelength_m": 0.005,
    "reflection_coeff": 0.3,
    "max_reflection_order": 2,
    "ap_array": [2, 2],
    "ut_array": [2, 1],
    "p_ap_dbm": 0.0,
    "noise_dbm": -94.0,
    "blockage": {"p_los": 0.0, "p_order": [0.2, 0.4]},
    "random_orientation": true
  },
  "dataset": {"n_samples": 60, "m": 1},
  "kfold": 3,
  "train": {"epochs": 3, "hidden_layers": 1, "hidden_width": 8, "n_inits": 1},
  "gifp": {"delta_s_m": 2.0, "delta_a_deg": 90.0},
  "eval": {"n_b_list": [1, 4], "methods": ["DNN-MT", "GIFP", "HBS", "PERFECT"]},
  "seed": 11
})json";

int run(const std::string& args) {
  const std::string cmd = std::string(BEAMSIM_BIN) + " " + args + " 2>> tmp_cli_stderr.log";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct ConfigFile {
  ConfigFile() {
    std::ofstream os("tmp_cli_config.json");
    os << kTinyConfig;
  }
  ~ConfigFile() { std::remove("tmp_cli_config.json"); }
};

}  // namespace

TEST_CASE("config parsing, validation and overrides") {
  ExperimentConfig cfg = parse_config(kTinyConfig);
  CHECK(cfg.n_samples == 60);
  CHECK(cfg.scenario.p_ap_w == doctest::Approx(1e-3));
  CHECK(cfg.scenario.noise_w == doctest::Approx(3.981e-13).epsilon(1e-3));
  CHECK(cfg.scenario.room.ap_pose.orientation[0] == doctest::Approx(M_PI));
  CHECK(cfg.gifp.delta_a_rad == doctest::Approx(M_PI / 2));

  SUBCASE("overrides win over the file") {
    ExperimentConfig over = parse_config(kTinyConfig, {"dataset.n_samples=123", "seed=9"});
    CHECK(over.n_samples == 123);
    CHECK(over.seed == 9);
  }

  SUBCASE("validation rejects bad settings") {
    CHECK_THROWS_AS(parse_config(kTinyConfig, {"scenario.ap_array=[3,2]"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kTinyConfig, {"scenario.user_grid_max=[9.0,7.0,1.5]"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kTinyConfig, {"scenario.blockage.p_los=1.5"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kTinyConfig, {"dataset.n_samples=0"}), ConfigError);
    CHECK_THROWS_AS(parse_config(kTinyConfig, {"eval.n_b_list=[0]"}), ConfigError);
    CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
  }

  SUBCASE("config text round trips losslessly") {
    ExperimentConfig back = parse_config(config_to_json(cfg) /* re-parse */, {});
    CHECK(config_to_json(back) == config_to_json(cfg));
  }
}

TEST_CASE("gen is deterministic and rejects bad requests") {
  ConfigFile guard;

  REQUIRE(run("gen --config tmp_cli_config.json --out tmp_cli_a.bsim") == 0);
  REQUIRE(run("gen --config tmp_cli_config.json --out tmp_cli_b.bsim") == 0);
  CHECK(slurp("tmp_cli_a.bsim") == slurp("tmp_cli_b.bsim"));

  // a different seed changes the bytes
  REQUIRE(run("gen --config tmp_cli_config.json --seed 12 --out tmp_cli_c.bsim") == 0);
  CHECK(slurp("tmp_cli_a.bsim") != slurp("tmp_cli_c.bsim"));

  CHECK(run("gen --config tmp_cli_config.json --override dataset.n_samples=0 --out tmp_cli_x.bsim") == 2);
  CHECK(run("gen --config missing_config.json --out tmp_cli_x.bsim") == 3);
  CHECK(run("gen --config tmp_cli_config.json") == 2);  // missing --out

  std::remove("tmp_cli_a.bsim");
  std::remove("tmp_cli_b.bsim");
  std::remove("tmp_cli_c.bsim");
}

TEST_CASE("train rejects unknown heads and divergent inputs") {
  ConfigFile guard;
  REQUIRE(run("gen --config tmp_cli_config.json --out tmp_cli_train.bsim") == 0);
  CHECK(run("train --config tmp_cli_config.json --data tmp_cli_train.bsim --head NOPE --out tmp_cli_m") == 2);
  CHECK(run("train --config tmp_cli_config.json --data tmp_cli_does_not_exist.bsim --head MT --out tmp_cli_m") == 3);
  std::remove("tmp_cli_train.bsim");
}

TEST_CASE("the full pipeline runs end to end at a tiny scale") {
  ConfigFile guard;
  REQUIRE(run("sweep --config tmp_cli_config.json --out tmp_cli_sweep --folds 2") == 0);

  const std::string csv = slurp("tmp_cli_sweep/sweep.csv");
  CHECK(csv.rfind("method,fold,init_seed,n_b,misalignment_prob,mean_ese,n_samples\n", 0) == 0);
  CHECK(csv.find("DNN-MT") != std::string::npos);
  CHECK(csv.find("GIFP") != std::string::npos);
  CHECK(csv.find("HBS") != std::string::npos);
  CHECK(csv.find("PERFECT") != std::string::npos);

  // PERFECT rows report zero misalignment at zero overhead
  std::istringstream lines(csv);
  std::string line;
  bool saw_perfect = false;
  while (std::getline(lines, line)) {
    if (line.rfind("PERFECT,", 0) == 0) {
      saw_perfect = true;
      CHECK(line.find(",0,0,") != std::string::npos);  // n_b = 0, misalignment 0
    }
  }
  CHECK(saw_perfect);

  // eval re-run over the same artifacts reproduces the CSV byte for byte
  REQUIRE(run("eval --config tmp_cli_config.json --data tmp_cli_sweep/dataset.bsim "
              "--models-mt tmp_cli_sweep/mt --gifp tmp_cli_sweep/gifp "
              "--out tmp_cli_sweep/again.csv --folds 2") == 0);
  CHECK(slurp("tmp_cli_sweep/again.csv") == csv);

  std::system("rm -rf tmp_cli_sweep tmp_cli_stderr.log");
}
