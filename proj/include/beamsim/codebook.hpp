// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_CODEBOOK_HPP
#define BEAMSIM_CODEBOOK_HPP

#include <armadillo>
#include <cstdint>
#include <utility>
#include <vector>

#include "beamsim/channel.hpp"
#include "beamsim/rng.hpp"

namespace beamsim {

// Real matrix indexed by (AP beam, UT beam), stored row-major so the flat
// beam-pair index is ap * n_ut + ut everywhere in the project.
struct PairMatrix {
  int n_ap = 0;
  int n_ut = 0;
  std::vector<double> values;

  PairMatrix() = default;
  PairMatrix(int ap, int ut) : n_ap(ap), n_ut(ut), values(static_cast<size_t>(ap) * ut, 0.0) {}

  int pairs() const { return n_ap * n_ut; }
  double at(int i, int j) const { return values[static_cast<size_t>(i) * n_ut + j]; }
  double& at(int i, int j) { return values[static_cast<size_t>(i) * n_ut + j]; }
};

using GainMatrix = PairMatrix;   // linear SNR per beam pair (noiseless)
using PhaseMatrix = PairMatrix;  // phase of the combined response, radians
using RssMatrix = PairMatrix;    // noisy received power per beam pair

// Flat index of the maximum entry, ties broken by the smaller flat index.
int argmax_pair(const PairMatrix& m);

// DFT beam codebook for an N_H x N_V UPA. Beam (p, q) (one-based grid indices)
// steers to phi_p = arccos((2p-1-N_H)/N_H), theta_q = arccos((2q-1-N_V)/N_V);
// the stored weight vector is the Kronecker DFT column (vertical-major,
// matching the element ordering), so the beams are exactly orthonormal.
struct Codebook {
  int n_h = 0;
  int n_v = 0;
  std::vector<arma::cx_vec> beams;  // flat index q0 * n_h + p0, zero-based

  int size() const { return n_h * n_v; }
  int flatten(int p0, int q0) const { return q0 * n_h + p0; }
  std::pair<int, int> unflatten(int idx) const { return {idx % n_h, idx / n_h}; }
};

// Throws std::invalid_argument unless both sizes are powers of two (required
// by the hierarchical search downstream).
Codebook dft_codebook(int n_h, int n_v);

// Complex combined responses c_ij = sqrt(P_AP) v_j^H H u_i for every beam
// pair, split into the persisted (gain, phase) pair: gain = |c|^2 / sigma2
// (linear SNR) and phase = arg(c).
struct BeamResponse {
  GainMatrix gain;
  PhaseMatrix phase;
};
BeamResponse beam_response(const arma::cx_mat& h, const Codebook& cb_ap, const Codebook& cb_ut,
                           double p_ap, double sigma2);

// G[i,j] = p_ap |v_j^H H u_i|^2 / sigma2. Throws on dimension mismatch.
GainMatrix gain_matrix(const arma::cx_mat& h, const Codebook& cb_ap, const Codebook& cb_ut,
                       double p_ap, double sigma2);

// R[i,j] = |c_ij + w_ij|^2 with |c_ij|^2 = sigma2 * G[i,j], arg c_ij from the
// companion phase matrix, and w_ij one independent CN(0, sigma2) draw per
// pair (row-major order).
RssMatrix measure_rss(const GainMatrix& gain, const PhaseMatrix& phase, double sigma2, Rng& rng);

// Inverse of beam_response: because the DFT beams form complete orthonormal
// bases at both ends, H = V (v_j^H H u_i) U^H exactly. Reconstructs the
// channel from the persisted (gain, phase) pair.
arma::cx_mat channel_from_response(const GainMatrix& gain, const PhaseMatrix& phase,
                                   const Codebook& cb_ap, const Codebook& cb_ut, double p_ap,
                                   double sigma2);

// DEACT hierarchical codeword: a 2^{k_v} x 2^{k_h} active sub-array steered to
// the level-grid angles, remaining elements zero, unit-normalized. Level
// indices n_h_idx, n_v_idx are one-based within their level. Throws on
// out-of-range indices.
arma::cx_vec deact_codeword(int k_h, int k_v, int n_h_idx, int n_v_idx, int big_n_h, int big_n_v);

}  // namespace beamsim

#endif
