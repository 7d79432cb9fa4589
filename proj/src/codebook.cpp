// SPDX-License-Identifier: Apache-2.0

#include "beamsim/codebook.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace beamsim {

namespace {

bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

// DFT column over n elements at direction-cosine c: entries exp(j pi k c).
arma::cx_vec dft_column(int n, double c) {
  arma::cx_vec v(static_cast<arma::uword>(n));
  for (int k = 0; k < n; ++k)
    v[static_cast<arma::uword>(k)] = std::exp(std::complex<double>(0.0, M_PI * k * c));
  return v;
}

double grid_cosine(int idx1, int n) { return (2.0 * idx1 - 1.0 - n) / n; }

}  // namespace

int argmax_pair(const PairMatrix& m) {
  int best = 0;
  for (int k = 1; k < m.pairs(); ++k)
    if (m.values[static_cast<size_t>(k)] > m.values[static_cast<size_t>(best)]) best = k;
  return best;
}

Codebook dft_codebook(int n_h, int n_v) {
  if (!is_pow2(n_h) || !is_pow2(n_v))
    throw std::invalid_argument("dft_codebook: array sizes must be powers of two");
  Codebook cb;
  cb.n_h = n_h;
  cb.n_v = n_v;
  cb.beams.resize(static_cast<size_t>(n_h) * n_v);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_h) * n_v);
  for (int q = 1; q <= n_v; ++q) {
    arma::cx_vec av = dft_column(n_v, grid_cosine(q, n_v));
    for (int p = 1; p <= n_h; ++p) {
      arma::cx_vec ah = dft_column(n_h, grid_cosine(p, n_h));
      cb.beams[static_cast<size_t>(cb.flatten(p - 1, q - 1))] = scale * arma::kron(av, ah);
    }
  }
  return cb;
}

BeamResponse beam_response(const arma::cx_mat& h, const Codebook& cb_ap, const Codebook& cb_ut,
                           double p_ap, double sigma2) {
  if (h.n_rows != static_cast<arma::uword>(cb_ut.size()) ||
      h.n_cols != static_cast<arma::uword>(cb_ap.size()))
    throw std::invalid_argument("beam_response: channel/codebook dimension mismatch");

  // m(j, i) = v_j^H H u_i for all pairs at once.
  arma::cx_mat v(h.n_rows, static_cast<arma::uword>(cb_ut.size()));
  arma::cx_mat u(h.n_cols, static_cast<arma::uword>(cb_ap.size()));
  for (int j = 0; j < cb_ut.size(); ++j) v.col(static_cast<arma::uword>(j)) = cb_ut.beams[static_cast<size_t>(j)];
  for (int i = 0; i < cb_ap.size(); ++i) u.col(static_cast<arma::uword>(i)) = cb_ap.beams[static_cast<size_t>(i)];
  arma::cx_mat m = v.t() * h * u;

  const double amp = std::sqrt(p_ap);
  BeamResponse out;
  out.gain = GainMatrix(cb_ap.size(), cb_ut.size());
  out.phase = PhaseMatrix(cb_ap.size(), cb_ut.size());
  for (int i = 0; i < cb_ap.size(); ++i)
    for (int j = 0; j < cb_ut.size(); ++j) {
      const std::complex<double> c = amp * m(static_cast<arma::uword>(j), static_cast<arma::uword>(i));
      out.gain.at(i, j) = std::norm(c) / sigma2;
      out.phase.at(i, j) = std::arg(c);
    }
  return out;
}

GainMatrix gain_matrix(const arma::cx_mat& h, const Codebook& cb_ap, const Codebook& cb_ut,
                       double p_ap, double sigma2) {
  return beam_response(h, cb_ap, cb_ut, p_ap, sigma2).gain;
}

arma::cx_mat channel_from_response(const GainMatrix& gain, const PhaseMatrix& phase,
                                   const Codebook& cb_ap, const Codebook& cb_ut, double p_ap,
                                   double sigma2) {
  const arma::uword n_ut = static_cast<arma::uword>(cb_ut.size());
  const arma::uword n_ap = static_cast<arma::uword>(cb_ap.size());
  arma::cx_mat m(n_ut, n_ap);
  const double amp = std::sqrt(p_ap);
  for (int i = 0; i < gain.n_ap; ++i)
    for (int j = 0; j < gain.n_ut; ++j)
      m(static_cast<arma::uword>(j), static_cast<arma::uword>(i)) =
          std::polar(std::sqrt(sigma2 * gain.at(i, j)) / amp, phase.at(i, j));

  arma::cx_mat v(n_ut, n_ut);
  arma::cx_mat u(n_ap, n_ap);
  for (int j = 0; j < cb_ut.size(); ++j) v.col(static_cast<arma::uword>(j)) = cb_ut.beams[static_cast<size_t>(j)];
  for (int i = 0; i < cb_ap.size(); ++i) u.col(static_cast<arma::uword>(i)) = cb_ap.beams[static_cast<size_t>(i)];
  return v * m * u.t();
}

RssMatrix measure_rss(const GainMatrix& gain, const PhaseMatrix& phase, double sigma2, Rng& rng) {
  RssMatrix r(gain.n_ap, gain.n_ut);
  for (int i = 0; i < gain.n_ap; ++i)
    for (int j = 0; j < gain.n_ut; ++j) {
      const double amp = std::sqrt(sigma2 * gain.at(i, j));
      const std::complex<double> c = std::polar(amp, phase.at(i, j));
      const std::complex<double> w = rng.complex_gaussian(sigma2);
      r.at(i, j) = std::norm(c + w);
    }
  return r;
}

arma::cx_vec deact_codeword(int k_h, int k_v, int n_h_idx, int n_v_idx, int big_n_h, int big_n_v) {
  if (!is_pow2(big_n_h) || !is_pow2(big_n_v))
    throw std::invalid_argument("deact_codeword: array sizes must be powers of two");
  const int nk_h = 1 << k_h;
  const int nk_v = 1 << k_v;
  if (k_h < 0 || k_v < 0 || nk_h > big_n_h || nk_v > big_n_v)
    throw std::invalid_argument("deact_codeword: level out of range");
  if (n_h_idx < 1 || n_h_idx > nk_h || n_v_idx < 1 || n_v_idx > nk_v)
    throw std::invalid_argument("deact_codeword: codeword index out of range");

  const double ch = grid_cosine(n_h_idx, nk_h);
  const double cv = grid_cosine(n_v_idx, nk_v);
  const double scale = 1.0 / std::sqrt(static_cast<double>(nk_h) * nk_v);
  arma::cx_vec w(static_cast<arma::uword>(big_n_h) * big_n_v, arma::fill::zeros);
  for (int v = 0; v < nk_v; ++v)
    for (int h = 0; h < nk_h; ++h)
      w[static_cast<arma::uword>(v * big_n_h + h)] =
          scale * std::exp(std::complex<double>(0.0, M_PI * (h * ch + v * cv)));
  return w;
}

}  // namespace beamsim
