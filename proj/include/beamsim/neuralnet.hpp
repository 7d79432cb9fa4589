// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_NEURALNET_HPP
#define BEAMSIM_NEURALNET_HPP

#include <armadillo>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "beamsim/dataset.hpp"

namespace beamsim {

// Output-head structure of the beam recommender.
//   SingleTask: one softmax over all beam pairs.
//   MultiTask: separate AP and UT softmaxes combined by outer product.
//   ExtendedMultiTask: separate azimuth/elevation softmaxes per end.
enum class HeadKind { SingleTask, MultiTask, ExtendedMultiTask };

HeadKind head_from_string(const std::string& name);  // "ST" | "MT" | "EMT"
std::string head_to_string(HeadKind head);

// Maps raw pose features into tanh-friendly ranges: positions to [-1, 1] per
// axis using the user-grid bounds, angles divided by pi.
struct FeatureScaler {
  arma::vec3 pos_min{arma::fill::zeros};
  arma::vec3 pos_max{arma::fill::zeros};

  arma::vec apply(const Pose& pose) const;
};

FeatureScaler scaler_from_scenario(const Scenario& s);

struct MlpModel {
  HeadKind head = HeadKind::SingleTask;
  ArrayDims ap_array;
  ArrayDims ut_array;
  FeatureScaler scaler;
  std::vector<arma::mat> weights;  // weights[i]: out x in, i = 0 .. n_hidden
  std::vector<arma::vec> biases;

  int hidden_layers() const { return static_cast<int>(weights.size()) - 1; }
  int hidden_width() const { return static_cast<int>(weights.front().n_rows); }
  int pair_count() const { return ap_array.count() * ut_array.count(); }
  int output_dim() const { return static_cast<int>(weights.back().n_rows); }
  // Softmax group boundaries [begin, end) within the output layer.
  std::vector<std::pair<int, int>> group_ranges() const;
  // Trainable parameters (weights + biases) of the output layer.
  int output_layer_parameter_count() const;
};

int head_output_dim(HeadKind head, const ArrayDims& ap, const ArrayDims& ut);

// Glorot-uniform weights, zero biases.
MlpModel init_model(HeadKind head, const ArrayDims& ap, const ArrayDims& ut, int n_hidden,
                    int width, const FeatureScaler& scaler, Rng& rng);

// Activations kept for the paired backward pass. Columns are batch samples.
struct ForwardWorkspace {
  arma::mat input;               // scaled features, 6 x B
  std::vector<arma::mat> acts;   // tanh outputs per hidden layer (pre-dropout)
  std::vector<arma::mat> masks;  // inverted-dropout masks; empty in inference
  arma::mat output;              // per-group softmax probabilities, out x B
};

// In train mode hidden units are dropped at `dropout_rate` with inverted
// scaling (masks worth 1/(1-rate)); inference is deterministic with no
// dropout. Throws on non-finite input.
void forward(const MlpModel& model, const arma::mat& x, bool train_mode, double dropout_rate,
             Rng* rng, ForwardWorkspace& ws);

// Single-sample inference: per-group softmax probabilities.
arma::vec forward_probs(const MlpModel& model, const arma::vec& scaled_x);

// Beam-pair probabilities o (flat index ap * N_UT + ut) from the head groups.
// ST reshapes; MT and EMT apply the Kronecker-product combination.
arma::vec combine_heads(const MlpModel& model, const arma::vec& output_probs);

// Training target distribution for an M-hot label (ranked pair indices):
// per-group marginals of L/M, each group summing to 1.
arma::vec make_targets(const MlpModel& model, const std::vector<std::uint32_t>& label);

// Cross entropy summed over groups, with a 1e-12 floor inside the log.
double loss_value(const arma::vec& output_probs, const arma::vec& targets,
                  const std::vector<std::pair<int, int>>& groups);

struct Gradients {
  std::vector<arma::mat> w;
  std::vector<arma::vec> b;
};

// Exact gradients of the summed per-sample loss over the workspace batch, for
// the realized dropout masks.
Gradients backward(const MlpModel& model, const ForwardWorkspace& ws, const arma::mat& targets);

struct AdamState {
  std::vector<arma::mat> m_w, v_w;
  std::vector<arma::vec> m_b, v_b;
  long step = 0;
};

AdamState make_adam_state(const MlpModel& model);

// Standard Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias correction.
void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, double learning_rate);

struct TrainConfig {
  int epochs = 50;
  int batch_start = 32;
  int batch_cap = 8192;
  double dropout = 0.1;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// Minibatch training with the doubling batch schedule (batch size doubles
// every ceil(epochs/9) epochs from batch_start, capped at min(batch_cap,
// train size)) and per-epoch seeded shuffling. Returns per-epoch mean loss;
// throws if the loss goes non-finite.
std::vector<double> train(MlpModel& model, const Dataset& ds, const std::vector<int>& train_indices,
                          const TrainConfig& cfg);

// The n_b beam pairs with the largest combined probability, descending, ties
// broken by the smaller flat index.
std::vector<std::uint32_t> recommend(const MlpModel& model, const Pose& pose, int n_b);

void write_model(const std::string& path, const MlpModel& model);
MlpModel read_model(const std::string& path);

}  // namespace beamsim

#endif
