// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver: dataset generation, recommender training, baseline
// construction and method-comparison sweeps, all reproducible from
// (config, seed).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "beamsim/config.hpp"
#include "beamsim/dataset.hpp"
#include "beamsim/eval.hpp"
#include "beamsim/neuralnet.hpp"
#include "beamsim/selectors.hpp"

namespace {

using namespace beamsim;

constexpr std::uint64_t kEvalNoiseSalt = 0x4556414Cull;  // "EVAL"
constexpr std::uint64_t kCiSalt = 0x43495054ull;         // "CIPT"
constexpr std::uint64_t kFoldSalt = 0x464F4C44ull;       // "FOLD"
constexpr std::uint64_t kTrainSalt = 0x5452414Eull;      // "TRAN"

std::string model_path(const std::string& stem, int fold, int init) {
  return stem + ".fold" + std::to_string(fold) + ".init" + std::to_string(init) + ".bsnn";
}

std::string gifp_path(const std::string& stem, int fold) {
  return stem + ".fold" + std::to_string(fold) + ".bsgt";
}

Dataset generate_from_config(const ExperimentConfig& cfg) {
  Dataset ds = generate_dataset(cfg.scenario, cfg.n_samples, cfg.label_m, cfg.seed);
  if (cfg.ci.sigma_p_m > 0.0 || cfg.ci.sigma_psi_rad > 0.0) {
    std::cerr << "applying CI perturbation: sigma_p=" << cfg.ci.sigma_p_m
              << " m, sigma_psi=" << cfg.ci.sigma_psi_rad << " rad\n";
    apply_ci_perturbation(ds, cfg.ci.sigma_p_m, cfg.ci.sigma_psi_rad, cfg.seed ^ kCiSalt);
  }
  return ds;
}

EvalSettings eval_settings_for(const ExperimentConfig& cfg, const Dataset& ds) {
  EvalSettings s;
  s.n_b_list = cfg.n_b_list;
  s.t_fr = cfg.t_fr_ms;
  s.t_s = cfg.t_s_ms;
  s.noise_salt = ds.seed ^ kEvalNoiseSalt;
  return s;
}

int resolved_fold_count(const ExperimentConfig& cfg, int folds_flag) {
  if (folds_flag <= 0) return cfg.kfold;
  return std::min(folds_flag, cfg.kfold);
}

TrainConfig train_config_for(const ExperimentConfig& cfg, std::uint64_t init_seed) {
  TrainConfig tc;
  tc.epochs = cfg.train.epochs;
  tc.batch_start = cfg.train.batch_start;
  tc.batch_cap = cfg.train.batch_cap;
  tc.dropout = cfg.train.dropout;
  tc.learning_rate = cfg.train.learning_rate;
  tc.seed = init_seed ^ kTrainSalt;
  return tc;
}

void cmd_gen(const ExperimentConfig& cfg, const std::string& out) {
  Dataset ds = generate_from_config(cfg);
  write_dataset(out, ds);
  std::cerr << "wrote " << ds.size() << " samples (m=" << ds.m << ", seed=" << ds.seed << ") to "
            << out << "\n";
}

void cmd_train(const ExperimentConfig& cfg, const std::string& data_path, const std::string& head_name,
               const std::string& out_stem, int folds_flag) {
  const HeadKind head = head_from_string(head_name);
  const Dataset ds = read_dataset(data_path);
  const auto folds = kfold_split(ds.size(), cfg.kfold, cfg.seed ^ kFoldSalt);
  const int n_folds = resolved_fold_count(cfg, folds_flag);

  std::ofstream loss_csv(out_stem + ".loss.csv");
  if (!loss_csv) throw std::runtime_error("cannot open for writing: " + out_stem + ".loss.csv");
  loss_csv << "head,fold,init_seed,epoch,mean_loss\n";

  for (int f = 0; f < n_folds; ++f) {
    for (int i = 0; i < cfg.train.n_inits; ++i) {
      const std::uint64_t init_seed = derive_init_seed(cfg.seed, f, i);
      Rng init_rng(init_seed);
      MlpModel model = init_model(head, cfg.scenario.ap_array, cfg.scenario.ut_array,
                                  cfg.train.hidden_layers, cfg.train.hidden_width,
                                  scaler_from_scenario(cfg.scenario), init_rng);
      const auto history = train(model, ds, folds[static_cast<size_t>(f)].first,
                                 train_config_for(cfg, init_seed));
      for (size_t e = 0; e < history.size(); ++e)
        loss_csv << head_name << ',' << f << ',' << init_seed << ',' << e << ',' << history[e]
                 << '\n';
      const std::string path = model_path(out_stem, f, i);
      write_model(path, model);
      std::cerr << "trained " << head_name << " fold " << f << " init " << i << " -> " << path
                << " (final loss " << history.back() << ")\n";
    }
  }
}

void cmd_gifp_build(const ExperimentConfig& cfg, const std::string& data_path,
                    const std::string& out_stem, int folds_flag) {
  const Dataset ds = read_dataset(data_path);
  const auto folds = kfold_split(ds.size(), cfg.kfold, cfg.seed ^ kFoldSalt);
  const int n_folds = resolved_fold_count(cfg, folds_flag);
  for (int f = 0; f < n_folds; ++f) {
    // Train-split-only counting: rebuild a view dataset over the fold.
    Dataset train_view;
    train_view.scenario = ds.scenario;
    train_view.seed = ds.seed;
    train_view.m = ds.m;
    for (int idx : folds[static_cast<size_t>(f)].first)
      train_view.samples.push_back(ds.samples[static_cast<size_t>(idx)]);
    GifpTable table = gifp_train(train_view, cfg.gifp.delta_s_m, cfg.gifp.delta_a_rad);
    const std::string path = gifp_path(out_stem, f);
    write_gifp_table(path, table);
    std::cerr << "built GIFP table fold " << f << " (" << table.geometry.bin_count()
              << " bins) -> " << path << "\n";
  }
}

void cmd_eval(const ExperimentConfig& cfg, const std::string& data_path,
              const std::string& models_st, const std::string& models_mt,
              const std::string& models_emt, const std::string& gifp_stem,
              const std::string& out_csv, int folds_flag) {
  const Dataset ds = read_dataset(data_path);
  auto folds = kfold_split(ds.size(), cfg.kfold, cfg.seed ^ kFoldSalt);
  folds.resize(static_cast<size_t>(resolved_fold_count(cfg, folds_flag)));

  std::vector<MethodArtifacts> artifacts;
  for (const std::string& method : cfg.methods) {
    MethodArtifacts art;
    art.method = method;
    if (method == "DNN-ST" || method == "DNN-MT" || method == "DNN-EMT") {
      const std::string& stem = method == "DNN-ST" ? models_st
                              : method == "DNN-MT" ? models_mt
                                                   : models_emt;
      if (stem.empty())
        throw ConfigError("method " + method + " requested but no model stem given");
      for (size_t f = 0; f < folds.size(); ++f) {
        std::vector<MlpModel> inits;
        std::vector<std::uint64_t> seeds;
        for (int i = 0; i < cfg.train.n_inits; ++i) {
          inits.push_back(read_model(model_path(stem, static_cast<int>(f), i)));
          seeds.push_back(derive_init_seed(cfg.seed, static_cast<int>(f), i));
        }
        art.models_per_fold.push_back(std::move(inits));
        art.init_seeds_per_fold.push_back(std::move(seeds));
      }
    } else if (method == "GIFP") {
      if (gifp_stem.empty()) throw ConfigError("method GIFP requested but no table stem given");
      for (size_t f = 0; f < folds.size(); ++f)
        art.tables_per_fold.push_back(read_gifp_table(gifp_path(gifp_stem, static_cast<int>(f))));
    }
    artifacts.push_back(std::move(art));
  }

  const auto rows = run_sweep(ds, folds, eval_settings_for(cfg, ds), artifacts);
  write_sweep_csv(out_csv, rows);
  std::cerr << "wrote " << rows.size() << " rows to " << out_csv << "\n";
}

void cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int folds_flag) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + out_dir);

  const std::string data_path = out_dir + "/dataset.bsim";
  cmd_gen(cfg, data_path);
  for (const std::string& method : cfg.methods) {
    if (method == "DNN-ST") cmd_train(cfg, data_path, "ST", out_dir + "/st", folds_flag);
    if (method == "DNN-MT") cmd_train(cfg, data_path, "MT", out_dir + "/mt", folds_flag);
    if (method == "DNN-EMT") cmd_train(cfg, data_path, "EMT", out_dir + "/emt", folds_flag);
    if (method == "GIFP") cmd_gifp_build(cfg, data_path, out_dir + "/gifp", folds_flag);
  }
  cmd_eval(cfg, data_path, out_dir + "/st", out_dir + "/mt", out_dir + "/emt", out_dir + "/gifp",
           out_dir + "/sweep.csv", folds_flag);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Position/orientation-aided mmWave beam selection simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_path, head_name;
  std::string models_st, models_mt, models_emt, gifp_stem;
  std::vector<std::string> overrides;
  std::int64_t seed_flag = -1;
  int folds_flag = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--seed", seed_flag, "override the config seed")->check(CLI::NonNegativeNumber);
    cmd->add_option("--override", overrides, "config override key.path=value");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a labeled dataset file");
  add_common(gen);
  gen->add_option("--out", out_path, "output dataset path")->required();

  CLI::App* tr = app.add_subcommand("train", "train beam recommender networks");
  add_common(tr);
  tr->add_option("--data", data_path, "dataset file")->required();
  tr->add_option("--head", head_name, "network head: ST, MT or EMT")->required();
  tr->add_option("--out", out_path, "model output stem")->required();
  tr->add_option("--folds", folds_flag, "train only the first N folds (0 = all)");

  CLI::App* gb = app.add_subcommand("gifp-build", "build GIFP fingerprint tables");
  add_common(gb);
  gb->add_option("--data", data_path, "dataset file")->required();
  gb->add_option("--out", out_path, "table output stem")->required();
  gb->add_option("--folds", folds_flag, "build only the first N folds (0 = all)");

  CLI::App* ev = app.add_subcommand("eval", "run the method-comparison sweep");
  add_common(ev);
  ev->add_option("--data", data_path, "dataset file")->required();
  ev->add_option("--models-st", models_st, "DNN-ST model stem");
  ev->add_option("--models-mt", models_mt, "DNN-MT model stem");
  ev->add_option("--models-emt", models_emt, "DNN-EMT model stem");
  ev->add_option("--gifp", gifp_stem, "GIFP table stem");
  ev->add_option("--out", out_path, "output CSV path")->required();
  ev->add_option("--folds", folds_flag, "evaluate only the first N folds (0 = all)");

  CLI::App* sw = app.add_subcommand("sweep", "full pipeline: gen, train, baselines, eval");
  add_common(sw);
  sw->add_option("--out", out_path, "output directory")->required();
  sw->add_option("--folds", folds_flag, "limit folds (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (seed_flag >= 0) overrides.push_back("seed=" + std::to_string(seed_flag));
    ExperimentConfig cfg = load_config(config_path, overrides);

    if (gen->parsed()) cmd_gen(cfg, out_path);
    if (tr->parsed()) cmd_train(cfg, data_path, head_name, out_path, folds_flag);
    if (gb->parsed()) cmd_gifp_build(cfg, data_path, out_path, folds_flag);
    if (ev->parsed())
      cmd_eval(cfg, data_path, models_st, models_mt, models_emt, gifp_stem, out_path, folds_flag);
    if (sw->parsed()) cmd_sweep(cfg, out_path, folds_flag);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
