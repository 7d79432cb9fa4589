// SPDX-License-Identifier: Apache-2.0

#include "beamsim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace beamsim {

namespace {
constexpr std::uint64_t kHbsNoiseSalt = 0x48425331ull;  // separate stream for HBS sensing
}

std::uint32_t scan_candidates(const RssMatrix& r, const std::vector<std::uint32_t>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("scan_candidates: empty candidate list");
  std::uint32_t best = candidates.front();
  if (best >= static_cast<std::uint32_t>(r.pairs()))
    throw std::invalid_argument("scan_candidates: candidate out of range");
  for (std::uint32_t c : candidates) {
    if (c >= static_cast<std::uint32_t>(r.pairs()))
      throw std::invalid_argument("scan_candidates: candidate out of range");
    const double rv = r.values[c], rb = r.values[best];
    if (rv > rb || (rv == rb && c < best)) best = c;
  }
  return best;
}

double misalignment_probability(const std::vector<ScanOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("misalignment_probability: no outcomes");
  size_t mis = 0;
  for (const auto& o : outcomes) mis += o.misaligned ? 1 : 0;
  return static_cast<double>(mis) / static_cast<double>(outcomes.size());
}

double scan_prefactor(int n_b, double t_fr, double t_s) {
  if (n_b < 0 || t_fr <= 0.0 || t_s < 0.0) throw std::invalid_argument("scan_prefactor: bad inputs");
  if (static_cast<double>(n_b) * t_s > t_fr)
    throw std::invalid_argument("scan_prefactor: scanning overhead exceeds the frame");
  return (t_fr - static_cast<double>(n_b) * t_s) / t_fr;
}

double ese(double snr_linear, int n_b, double t_fr, double t_s) {
  if (snr_linear < 0.0) throw std::invalid_argument("ese: negative SNR");
  return scan_prefactor(n_b, t_fr, t_s) * std::log2(1.0 + snr_linear);
}

namespace {

struct Accumulator {
  size_t misaligned = 0;
  double ese_sum = 0.0;
  size_t n = 0;
};

std::vector<SweepRow> rows_from(const std::string& method, int fold, std::uint64_t init_seed,
                                const std::vector<int>& n_b_list,
                                const std::vector<Accumulator>& acc) {
  std::vector<SweepRow> rows;
  rows.reserve(n_b_list.size());
  for (size_t k = 0; k < n_b_list.size(); ++k) {
    SweepRow row;
    row.method = method;
    row.fold = fold;
    row.init_seed = init_seed;
    row.n_b = n_b_list[k];
    row.n_samples = acc[k].n;
    row.misalignment_prob = acc[k].n ? static_cast<double>(acc[k].misaligned) / acc[k].n : 0.0;
    row.mean_ese = acc[k].n ? acc[k].ese_sum / static_cast<double>(acc[k].n) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> evaluate_candidate_method(const std::string& method, const Dataset& ds,
                                                const std::vector<int>& test_indices,
                                                const CandidateProvider& provider,
                                                const EvalSettings& settings, int fold,
                                                std::uint64_t init_seed) {
  if (settings.n_b_list.empty()) throw std::invalid_argument("evaluate: empty n_b list");
  const int n_b_max = *std::max_element(settings.n_b_list.begin(), settings.n_b_list.end());

  // Walk the list sizes in ascending order (rows still come out in list
  // order): candidate lists are prefix-nested in n_b, so one pass over the
  // longest list with a running restricted argmax covers every size.
  std::vector<size_t> by_size(settings.n_b_list.size());
  std::iota(by_size.begin(), by_size.end(), size_t{0});
  std::sort(by_size.begin(), by_size.end(), [&](size_t a, size_t b) {
    return settings.n_b_list[a] < settings.n_b_list[b];
  });

  std::vector<Accumulator> acc(settings.n_b_list.size());
  for (int idx : test_indices) {
    const Sample& s = ds.samples[static_cast<size_t>(idx)];
    Rng noise_rng = Rng::stream(settings.noise_salt, static_cast<std::uint64_t>(idx));
    const RssMatrix r = measure_rss(s.gains, s.phases, ds.scenario.noise_w, noise_rng);
    const int best_all = argmax_pair(r);

    const auto candidates = provider(s, n_b_max);
    std::uint32_t running = candidates.front();
    size_t pos = 0;
    for (size_t k : by_size) {
      const size_t want = static_cast<size_t>(settings.n_b_list[k]);
      for (; pos < want && pos < candidates.size(); ++pos) {
        const std::uint32_t c = candidates[pos];
        const double rv = r.values[c], rb = r.values[running];
        if (rv > rb || (rv == rb && c < running)) running = c;
      }
      acc[k].misaligned += (r.values[running] < r.values[static_cast<size_t>(best_all)]) ? 1 : 0;
      acc[k].ese_sum += ese(s.gains.values[running], settings.n_b_list[k], settings.t_fr, settings.t_s);
      acc[k].n += 1;
    }
  }
  return rows_from(method, fold, init_seed, settings.n_b_list, acc);
}

std::vector<SweepRow> evaluate_model(const MlpModel& model, const std::string& method,
                                     const Dataset& ds, const std::vector<int>& test_indices,
                                     const EvalSettings& settings, int fold,
                                     std::uint64_t init_seed) {
  return evaluate_candidate_method(
      method, ds, test_indices,
      [&model](const Sample& s, int n_b) { return recommend(model, s.pose, n_b); }, settings,
      fold, init_seed);
}

std::vector<SweepRow> evaluate_gifp(const GifpTable& table, const Dataset& ds,
                                    const std::vector<int>& test_indices,
                                    const EvalSettings& settings, int fold) {
  return evaluate_candidate_method(
      "GIFP", ds, test_indices,
      [&table](const Sample& s, int n_b) { return gifp_recommend(table, s.pose, n_b); }, settings,
      fold, 0);
}

std::vector<SweepRow> evaluate_hbs(const Dataset& ds, const std::vector<int>& test_indices,
                                   const EvalSettings& settings, int fold) {
  const Scenario& sc = ds.scenario;
  const Codebook cb_ap = dft_codebook(sc.ap_array.horizontal, sc.ap_array.vertical);
  const Codebook cb_ut = dft_codebook(sc.ut_array.horizontal, sc.ut_array.vertical);
  const double amp = std::sqrt(sc.p_ap_w);

  std::vector<int> n_b_list = {2 * static_cast<int>(std::log2(sc.ut_array.count())) +
                               2 * static_cast<int>(std::log2(sc.ap_array.count()))};
  std::vector<Accumulator> acc(1);
  for (int idx : test_indices) {
    const Sample& s = ds.samples[static_cast<size_t>(idx)];
    const arma::cx_mat h =
        channel_from_response(s.gains, s.phases, cb_ap, cb_ut, sc.p_ap_w, sc.noise_w);

    Rng sense_rng = Rng::stream(settings.noise_salt ^ kHbsNoiseSalt, static_cast<std::uint64_t>(idx));
    RssOracle oracle = [&](const arma::cx_vec& u, const arma::cx_vec& v) {
      const std::complex<double> sig = amp * arma::cdot(v, h * u);
      return std::norm(sig + sense_rng.complex_gaussian(sc.noise_w));
    };
    const HbsResult res = hbs_run(oracle, sc.ap_array, sc.ut_array);
    const std::uint32_t chosen =
        res.ap_beam * static_cast<std::uint32_t>(sc.ut_array.count()) + res.ut_beam;

    Rng noise_rng = Rng::stream(settings.noise_salt, static_cast<std::uint64_t>(idx));
    const RssMatrix r = measure_rss(s.gains, s.phases, sc.noise_w, noise_rng);
    const int best_all = argmax_pair(r);

    acc[0].misaligned += (r.values[chosen] < r.values[static_cast<size_t>(best_all)]) ? 1 : 0;
    acc[0].ese_sum += ese(s.gains.values[chosen], res.sensed_pairs, settings.t_fr, settings.t_s);
    acc[0].n += 1;
  }
  return rows_from("HBS", fold, 0, n_b_list, acc);
}

std::vector<SweepRow> evaluate_perfect(const Dataset& ds, const std::vector<int>& test_indices,
                                       const EvalSettings& settings, int fold) {
  std::vector<Accumulator> acc(1);
  for (int idx : test_indices) {
    const Sample& s = ds.samples[static_cast<size_t>(idx)];
    const int best = argmax_pair(s.gains);
    acc[0].ese_sum += ese(s.gains.values[static_cast<size_t>(best)], 0, settings.t_fr, settings.t_s);
    acc[0].n += 1;
  }
  return rows_from("PERFECT", fold, 0, {0}, acc);
}

std::vector<SweepRow> run_sweep(const Dataset& ds,
                                const std::vector<std::pair<std::vector<int>, std::vector<int>>>& folds,
                                const EvalSettings& settings,
                                const std::vector<MethodArtifacts>& artifacts) {
  std::vector<SweepRow> rows;
  for (const MethodArtifacts& art : artifacts) {
    for (size_t f = 0; f < folds.size(); ++f) {
      const auto& test = folds[f].second;
      const int fold = static_cast<int>(f);
      if (art.method == "HBS") {
        auto r = evaluate_hbs(ds, test, settings, fold);
        rows.insert(rows.end(), r.begin(), r.end());
      } else if (art.method == "PERFECT") {
        auto r = evaluate_perfect(ds, test, settings, fold);
        rows.insert(rows.end(), r.begin(), r.end());
      } else if (art.method == "GIFP") {
        if (f >= art.tables_per_fold.size())
          throw std::invalid_argument("run_sweep: missing GIFP table for fold");
        auto r = evaluate_gifp(art.tables_per_fold[f], ds, test, settings, fold);
        rows.insert(rows.end(), r.begin(), r.end());
      } else {
        if (f >= art.models_per_fold.size() || art.models_per_fold[f].empty())
          throw std::invalid_argument("run_sweep: missing models for fold");
        for (size_t i = 0; i < art.models_per_fold[f].size(); ++i) {
          const std::uint64_t init_seed = f < art.init_seeds_per_fold.size() &&
                                                  i < art.init_seeds_per_fold[f].size()
                                              ? art.init_seeds_per_fold[f][i]
                                              : i;
          auto r = evaluate_model(art.models_per_fold[f][i], art.method, ds, test, settings, fold,
                                  init_seed);
          rows.insert(rows.end(), r.begin(), r.end());
        }
      }
    }
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "method,fold,init_seed,n_b,misalignment_prob,mean_ese,n_samples\n";
  char buf[64];
  for (const SweepRow& r : rows) {
    os << r.method << ',' << r.fold << ',' << r.init_seed << ',' << r.n_b << ',';
    std::snprintf(buf, sizeof buf, "%.10g", r.misalignment_prob);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.10g", r.mean_ese);
    os << buf << ',' << r.n_samples << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace beamsim
