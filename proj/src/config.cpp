// SPDX-License-Identifier: Apache-2.0

#include "beamsim/config.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace beamsim {

using nlohmann::json;

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

namespace {

constexpr double kDegToRad = M_PI / 180.0;

arma::vec3 vec3_from(const json& a) {
  return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
}

bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

json apply_overrides(json j, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override must look like key.path=value: " + ov);
    std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    for (char& c : key)
      if (c == '.') c = '/';
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // unquoted strings, e.g. head names
    }
    j[json::json_pointer("/" + key)] = value;
    std::cerr << "config override: " << ov << "\n";
  }
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text,
                              const std::vector<std::string>& overrides) {
  json j;
  try {
    j = apply_overrides(json::parse(json_text), overrides);

    ExperimentConfig cfg;
    const json& sc = j.at("scenario");
    Scenario& s = cfg.scenario;
    s.room.width = sc.at("room").at("width").get<double>();
    s.room.length = sc.at("room").at("length").get<double>();
    s.room.height = sc.at("room").at("height").get<double>();
    s.room.ap_pose.position = vec3_from(sc.at("ap_position"));
    // degrees at the human-facing boundary; radians accepted for exact
    // machine round trips
    if (sc.contains("ap_orientation"))
      s.room.ap_pose.orientation = vec3_from(sc.at("ap_orientation"));
    else
      s.room.ap_pose.orientation = kDegToRad * vec3_from(sc.at("ap_orientation_deg"));
    s.room.grid_min = vec3_from(sc.at("user_grid_min"));
    s.room.grid_max = vec3_from(sc.at("user_grid_max"));
    s.room.wavelength = sc.at("wavelength_m").get<double>();
    s.room.reflection_coeff = sc.at("reflection_coeff").get<double>();
    s.max_reflection_order = sc.at("max_reflection_order").get<int>();
    s.ap_array = {sc.at("ap_array").at(0).get<int>(), sc.at("ap_array").at(1).get<int>()};
    s.ut_array = {sc.at("ut_array").at(0).get<int>(), sc.at("ut_array").at(1).get<int>()};
    s.p_ap_w = sc.contains("p_ap_w") ? sc.at("p_ap_w").get<double>()
                                     : dbm_to_watts(sc.at("p_ap_dbm").get<double>());
    s.noise_w = sc.contains("noise_w") ? sc.at("noise_w").get<double>()
                                       : dbm_to_watts(sc.at("noise_dbm").get<double>());
    s.blockage.p_los = sc.at("blockage").at("p_los").get<double>();
    s.blockage.p_order = sc.at("blockage").at("p_order").get<std::vector<double>>();
    s.random_orientation = sc.value("random_orientation", true);

    cfg.n_samples = j.at("dataset").at("n_samples").get<int>();
    cfg.label_m = j.at("dataset").at("m").get<int>();
    cfg.kfold = j.value("kfold", 5);

    if (j.contains("train")) {
      const json& t = j.at("train");
      cfg.train.epochs = t.value("epochs", cfg.train.epochs);
      cfg.train.hidden_layers = t.value("hidden_layers", cfg.train.hidden_layers);
      cfg.train.hidden_width = t.value("hidden_width", cfg.train.hidden_width);
      cfg.train.dropout = t.value("dropout", cfg.train.dropout);
      cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
      cfg.train.batch_start = t.value("batch_start", cfg.train.batch_start);
      cfg.train.batch_cap = t.value("batch_cap", cfg.train.batch_cap);
      cfg.train.n_inits = t.value("n_inits", cfg.train.n_inits);
    }
    if (j.contains("gifp")) {
      cfg.gifp.delta_s_m = j.at("gifp").value("delta_s_m", cfg.gifp.delta_s_m);
      if (j.at("gifp").contains("delta_a_rad"))
        cfg.gifp.delta_a_rad = j.at("gifp").at("delta_a_rad").get<double>();
      else if (j.at("gifp").contains("delta_a_deg"))
        cfg.gifp.delta_a_rad = j.at("gifp").at("delta_a_deg").get<double>() * kDegToRad;
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      if (e.contains("n_b_list")) cfg.n_b_list = e.at("n_b_list").get<std::vector<int>>();
      cfg.t_fr_ms = e.value("t_fr_ms", cfg.t_fr_ms);
      cfg.t_s_ms = e.value("t_s_ms", cfg.t_s_ms);
      if (e.contains("methods")) cfg.methods = e.at("methods").get<std::vector<std::string>>();
    }
    if (j.contains("ci")) {
      cfg.ci.sigma_p_m = j.at("ci").value("sigma_p_m", 0.0);
      cfg.ci.sigma_psi_rad = j.at("ci").value("sigma_psi_rad", 0.0);
    }
    cfg.seed = j.value("seed", std::uint64_t{1});

    validate_config(cfg);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["scenario"] = json::parse(scenario_to_json(cfg.scenario));
  j["dataset"] = {{"n_samples", cfg.n_samples}, {"m", cfg.label_m}};
  j["kfold"] = cfg.kfold;
  j["train"] = {{"epochs", cfg.train.epochs},
                {"hidden_layers", cfg.train.hidden_layers},
                {"hidden_width", cfg.train.hidden_width},
                {"dropout", cfg.train.dropout},
                {"learning_rate", cfg.train.learning_rate},
                {"batch_start", cfg.train.batch_start},
                {"batch_cap", cfg.train.batch_cap},
                {"n_inits", cfg.train.n_inits}};
  j["gifp"] = {{"delta_s_m", cfg.gifp.delta_s_m}, {"delta_a_rad", cfg.gifp.delta_a_rad}};
  j["eval"] = {{"n_b_list", cfg.n_b_list},
               {"t_fr_ms", cfg.t_fr_ms},
               {"t_s_ms", cfg.t_s_ms},
               {"methods", cfg.methods}};
  j["ci"] = {{"sigma_p_m", cfg.ci.sigma_p_m}, {"sigma_psi_rad", cfg.ci.sigma_psi_rad}};
  j["seed"] = cfg.seed;
  return j.dump(2);
}

void validate_config(const ExperimentConfig& cfg) {
  const Scenario& s = cfg.scenario;
  if (!is_pow2(s.ap_array.horizontal) || !is_pow2(s.ap_array.vertical) ||
      !is_pow2(s.ut_array.horizontal) || !is_pow2(s.ut_array.vertical))
    throw ConfigError("array sizes must be powers of two");
  if (s.room.width <= 0 || s.room.length <= 0 || s.room.height <= 0)
    throw ConfigError("room dimensions must be positive");
  const double dims[3] = {s.room.width, s.room.length, s.room.height};
  for (int a = 0; a < 3; ++a) {
    if (s.room.grid_min[a] > s.room.grid_max[a]) throw ConfigError("inverted user grid");
    if (s.room.grid_min[a] < -1e-9 || s.room.grid_max[a] > dims[a] + 1e-9)
      throw ConfigError("user grid outside the room");
  }
  if (s.room.wavelength <= 0) throw ConfigError("wavelength must be positive");
  if (s.room.reflection_coeff < 0 || s.room.reflection_coeff > 1)
    throw ConfigError("reflection coefficient outside [0, 1]");
  if (s.max_reflection_order < 0 || s.max_reflection_order > 2)
    throw ConfigError("max_reflection_order must be in {0, 1, 2}");
  if (s.p_ap_w <= 0 || s.noise_w <= 0) throw ConfigError("powers must be positive");
  if (s.blockage.p_los < 0 || s.blockage.p_los > 1) throw ConfigError("p_los outside [0, 1]");
  for (double p : s.blockage.p_order)
    if (p < 0 || p > 1) throw ConfigError("p_order entry outside [0, 1]");

  const int n_pairs = s.ap_array.count() * s.ut_array.count();
  if (cfg.n_samples < 1) throw ConfigError("dataset.n_samples must be >= 1");
  if (cfg.label_m < 1 || cfg.label_m > n_pairs) throw ConfigError("dataset.m out of range");
  if (cfg.kfold < 2) throw ConfigError("kfold must be >= 2");
  if (cfg.train.epochs < 1 || cfg.train.hidden_layers < 1 || cfg.train.hidden_width < 1 ||
      cfg.train.batch_start < 1 || cfg.train.batch_cap < cfg.train.batch_start ||
      cfg.train.n_inits < 1)
    throw ConfigError("bad train settings");
  if (cfg.train.dropout < 0 || cfg.train.dropout >= 1)
    throw ConfigError("dropout must be in [0, 1)");
  if (cfg.train.learning_rate <= 0) throw ConfigError("learning rate must be positive");
  if (cfg.gifp.delta_s_m <= 0 || cfg.gifp.delta_a_rad <= 0)
    throw ConfigError("GIFP bin sizes must be positive");
  if (cfg.n_b_list.empty()) throw ConfigError("eval.n_b_list must not be empty");
  for (int n_b : cfg.n_b_list)
    if (n_b < 1 || n_b > n_pairs) throw ConfigError("eval.n_b_list entry out of range");
  if (cfg.t_fr_ms <= 0 || cfg.t_s_ms < 0) throw ConfigError("bad frame timing");
  if (cfg.ci.sigma_p_m < 0 || cfg.ci.sigma_psi_rad < 0) throw ConfigError("negative CI sigma");
  for (const std::string& m : cfg.methods)
    if (m != "DNN-ST" && m != "DNN-MT" && m != "DNN-EMT" && m != "GIFP" && m != "HBS" &&
        m != "PERFECT")
      throw ConfigError("unknown method: " + m);
}

std::uint64_t derive_init_seed(std::uint64_t master_seed, int fold, int init) {
  return Rng::stream(master_seed ^ 0x494E4954ull,  // "INIT"
                     (static_cast<std::uint64_t>(fold) << 20) + static_cast<std::uint64_t>(init))
      .next_u64();
}

}  // namespace beamsim
