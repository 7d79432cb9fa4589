// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_CONFIG_HPP
#define BEAMSIM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "beamsim/dataset.hpp"

namespace beamsim {

// Thrown for malformed or inconsistent configuration (CLI exit code 2);
// plain std::runtime_error is reserved for I/O failures (exit code 3).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct TrainSettings {
  int epochs = 50;
  int hidden_layers = 5;
  int hidden_width = 128;
  double dropout = 0.1;
  double learning_rate = 1e-3;
  int batch_start = 32;
  int batch_cap = 8192;
  int n_inits = 3;
};

struct GifpSettings {
  double delta_s_m = 1.0;
  double delta_a_rad = M_PI / 8.0;  // 22.5 deg; degrees only at the config boundary
};

struct CiSettings {
  double sigma_p_m = 0.0;
  double sigma_psi_rad = 0.0;
};

// One experiment recipe: scenario plus dataset, training, baseline and sweep
// knobs. Angles and powers are converted (degrees -> radians, dBm -> watts)
// when the JSON is parsed; everything in here is linear/radians.
struct ExperimentConfig {
  Scenario scenario;
  int n_samples = 70000;
  int label_m = 1;
  int kfold = 5;
  TrainSettings train;
  GifpSettings gifp;
  std::vector<int> n_b_list{1, 2, 3, 5, 10, 20, 30, 50};
  double t_fr_ms = 20.0;
  double t_s_ms = 0.1;
  CiSettings ci;
  std::vector<std::string> methods{"DNN-ST", "DNN-MT", "DNN-EMT", "GIFP", "HBS", "PERFECT"};
  std::uint64_t seed = 1;
};

double dbm_to_watts(double dbm);

// Parses and validates a config JSON text. Overrides are "dotted.key=value"
// pairs applied on top of the file before parsing (value parsed as JSON when
// possible, else taken as a string); each applied override is logged to
// stderr. Throws ConfigError on malformed input or failed validation.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::vector<std::string>& overrides = {});

// Reads the file (std::runtime_error on I/O failure) and parses it.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});

std::string config_to_json(const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);

// Deterministic per-(fold, init) seed for weight initialization; recomputed
// identically by the train and eval commands.
std::uint64_t derive_init_seed(std::uint64_t master_seed, int fold, int init);

}  // namespace beamsim

#endif
