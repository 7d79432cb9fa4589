// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_EVAL_HPP
#define BEAMSIM_EVAL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "beamsim/dataset.hpp"
#include "beamsim/neuralnet.hpp"
#include "beamsim/selectors.hpp"

namespace beamsim {

struct ScanOutcome {
  std::uint32_t chosen = 0;  // beam-pair flat index
  bool misaligned = false;   // scanned set missed the argmax of the sample's RSS
  double snr = 0.0;          // noiseless linear SNR of the chosen pair
  int n_b = 0;               // scanned beam pairs charged to the method
};

// Argmax of r restricted to the candidate list, ties by smaller flat index.
// Throws on an empty list or out-of-range indices.
std::uint32_t scan_candidates(const RssMatrix& r, const std::vector<std::uint32_t>& candidates);

double misalignment_probability(const std::vector<ScanOutcome>& outcomes);

// Fraction of the frame left for data after scanning n_b pairs. t_fr and t_s
// share any one time unit.
double scan_prefactor(int n_b, double t_fr, double t_s);

// (t_fr - n_b t_s)/t_fr * log2(1 + snr). Throws if the overhead exceeds the
// frame (not clamped).
double ese(double snr_linear, int n_b, double t_fr, double t_s);

struct EvalSettings {
  std::vector<int> n_b_list;
  double t_fr = 20.0;  // frame duration
  double t_s = 0.1;    // per-pair scan time, same unit as t_fr
  // Per-sample measurement noise is seeded from (noise_salt, sample index),
  // independent of the method under test, so every method faces the same
  // measurements on a given sample.
  std::uint64_t noise_salt = 0;
};

// One aggregate cell of the comparison sweep.
struct SweepRow {
  std::string method;
  int fold = 0;
  std::uint64_t init_seed = 0;
  int n_b = 0;
  double misalignment_prob = 0.0;
  double mean_ese = 0.0;
  size_t n_samples = 0;
};

// Candidate list for one sample at list size n_b. Lists must be prefix-nested
// in n_b (true for both the DNN recommenders and GIFP).
using CandidateProvider = std::function<std::vector<std::uint32_t>(const Sample&, int n_b)>;

std::vector<SweepRow> evaluate_candidate_method(const std::string& method, const Dataset& ds,
                                                const std::vector<int>& test_indices,
                                                const CandidateProvider& provider,
                                                const EvalSettings& settings, int fold,
                                                std::uint64_t init_seed);

std::vector<SweepRow> evaluate_model(const MlpModel& model, const std::string& method,
                                     const Dataset& ds, const std::vector<int>& test_indices,
                                     const EvalSettings& settings, int fold,
                                     std::uint64_t init_seed);

std::vector<SweepRow> evaluate_gifp(const GifpTable& table, const Dataset& ds,
                                    const std::vector<int>& test_indices,
                                    const EvalSettings& settings, int fold);

// Runs the adaptive DEACT search per sample against the exactly-reconstructed
// channel, charging the fixed 2 log2(N_UT) + 2 log2(N_AP) overhead.
std::vector<SweepRow> evaluate_hbs(const Dataset& ds, const std::vector<int>& test_indices,
                                   const EvalSettings& settings, int fold);

// Genie-aided upper bound: max-SNR pair at zero scanning overhead.
std::vector<SweepRow> evaluate_perfect(const Dataset& ds, const std::vector<int>& test_indices,
                                       const EvalSettings& settings, int fold);

// Trained artifacts for one method across folds (models additionally per
// weight init; one row per fold/init/N_b cell).
struct MethodArtifacts {
  std::string method;  // DNN-ST | DNN-MT | DNN-EMT | GIFP | HBS | PERFECT
  std::vector<std::vector<MlpModel>> models_per_fold;
  std::vector<std::vector<std::uint64_t>> init_seeds_per_fold;  // row labels
  std::vector<GifpTable> tables_per_fold;
};

std::vector<SweepRow> run_sweep(const Dataset& ds,
                                const std::vector<std::pair<std::vector<int>, std::vector<int>>>& folds,
                                const EvalSettings& settings,
                                const std::vector<MethodArtifacts>& artifacts);

// CSV contract: header "method,fold,init_seed,n_b,misalignment_prob,mean_ese,
// n_samples", one row per aggregate cell.
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace beamsim

#endif
