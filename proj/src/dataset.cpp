// SPDX-License-Identifier: Apache-2.0

#include "beamsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "io.hpp"
#include "json.hpp"

namespace beamsim {

namespace {

using nlohmann::json;

json scenario_json_obj(const Scenario& s) {
  json j;
  j["room"] = {{"width", s.room.width}, {"length", s.room.length}, {"height", s.room.height}};
  j["ap_position"] = {s.room.ap_pose.position[0], s.room.ap_pose.position[1],
                      s.room.ap_pose.position[2]};
  j["ap_orientation"] = {s.room.ap_pose.orientation[0], s.room.ap_pose.orientation[1],
                         s.room.ap_pose.orientation[2]};
  j["user_grid_min"] = {s.room.grid_min[0], s.room.grid_min[1], s.room.grid_min[2]};
  j["user_grid_max"] = {s.room.grid_max[0], s.room.grid_max[1], s.room.grid_max[2]};
  j["wavelength_m"] = s.room.wavelength;
  j["reflection_coeff"] = s.room.reflection_coeff;
  j["max_reflection_order"] = s.max_reflection_order;
  j["ap_array"] = {s.ap_array.horizontal, s.ap_array.vertical};
  j["ut_array"] = {s.ut_array.horizontal, s.ut_array.vertical};
  j["p_ap_w"] = s.p_ap_w;
  j["noise_w"] = s.noise_w;
  j["blockage"] = {{"p_los", s.blockage.p_los}, {"p_order", s.blockage.p_order}};
  j["random_orientation"] = s.random_orientation;
  return j;
}

arma::vec3 vec3_from(const json& a) { return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; }

void quantize_to_f32(PairMatrix& m) {
  for (double& v : m.values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

std::string scenario_to_json(const Scenario& s) { return scenario_json_obj(s).dump(); }

Scenario scenario_from_json(const std::string& text) {
  json j = json::parse(text);
  Scenario s;
  s.room.width = j.at("room").at("width").get<double>();
  s.room.length = j.at("room").at("length").get<double>();
  s.room.height = j.at("room").at("height").get<double>();
  s.room.ap_pose.position = vec3_from(j.at("ap_position"));
  s.room.ap_pose.orientation = vec3_from(j.at("ap_orientation"));
  s.room.grid_min = vec3_from(j.at("user_grid_min"));
  s.room.grid_max = vec3_from(j.at("user_grid_max"));
  s.room.wavelength = j.at("wavelength_m").get<double>();
  s.room.reflection_coeff = j.at("reflection_coeff").get<double>();
  s.max_reflection_order = j.at("max_reflection_order").get<int>();
  s.ap_array = {j.at("ap_array").at(0).get<int>(), j.at("ap_array").at(1).get<int>()};
  s.ut_array = {j.at("ut_array").at(0).get<int>(), j.at("ut_array").at(1).get<int>()};
  s.p_ap_w = j.at("p_ap_w").get<double>();
  s.noise_w = j.at("noise_w").get<double>();
  s.blockage.p_los = j.at("blockage").at("p_los").get<double>();
  s.blockage.p_order = j.at("blockage").at("p_order").get<std::vector<double>>();
  s.random_orientation = j.at("random_orientation").get<bool>();
  return s;
}

std::uint64_t scenario_hash(const Scenario& s) { return io::fnv1a64(scenario_to_json(s)); }

std::uint64_t scenario_hash_ignoring_blockage(const Scenario& s) {
  Scenario stripped = s;
  stripped.blockage = BlockageConfig{};
  return scenario_hash(stripped);
}

int LabelMatrix::sum() const {
  return static_cast<int>(std::count(marks.begin(), marks.end(), std::uint8_t{1}));
}

std::vector<std::uint32_t> rank_beam_pairs(const RssMatrix& r, int m) {
  const int n = r.pairs();
  if (m < 1 || m > n) throw std::invalid_argument("rank_beam_pairs: m out of range");
  std::vector<std::uint32_t> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0u);
  std::partial_sort(idx.begin(), idx.begin() + m, idx.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      const double va = r.values[a], vb = r.values[b];
                      if (va != vb) return va > vb;
                      return a < b;
                    });
  idx.resize(static_cast<size_t>(m));
  return idx;
}

LabelMatrix label_mhot(const RssMatrix& r, int m) {
  LabelMatrix l(r.n_ap, r.n_ut);
  for (std::uint32_t k : rank_beam_pairs(r, m)) l.marks[k] = 1;
  return l;
}

Pose draw_pose(const Scenario& s, Rng& rng) {
  Pose pose;
  for (int a = 0; a < 3; ++a)
    pose.position[a] = rng.uniform(s.room.grid_min[a], s.room.grid_max[a]);
  if (s.random_orientation) {
    pose.orientation[0] = rng.uniform(-kAlphaHalfRange, kAlphaHalfRange);
    pose.orientation[1] = rng.uniform(-kBetaGammaHalfRange, kBetaGammaHalfRange);
    pose.orientation[2] = rng.uniform(-kBetaGammaHalfRange, kBetaGammaHalfRange);
  }
  return pose;
}

Sample generate_sample(const Scenario& s, const Codebook& cb_ap, const Codebook& cb_ut,
                       std::uint64_t seed, std::uint64_t index, int m) {
  Rng rng = Rng::stream(seed, index);
  Sample out;
  out.m = m;
  out.pose = draw_pose(s, rng);

  auto paths = trace_paths(s.room, out.pose, s.max_reflection_order);
  paths = apply_blockage(paths, s.blockage, rng);
  arma::cx_mat h = assemble_channel(paths, s.ut_array, s.ap_array);

  BeamResponse resp = beam_response(h, cb_ap, cb_ut, s.p_ap_w, s.noise_w);
  quantize_to_f32(resp.gain);
  quantize_to_f32(resp.phase);
  out.gains = std::move(resp.gain);
  out.phases = std::move(resp.phase);

  out.noise_seed = rng.next_u64();
  Rng noise_rng(out.noise_seed);
  RssMatrix r = measure_rss(out.gains, out.phases, s.noise_w, noise_rng);
  out.label = rank_beam_pairs(r, m);
  return out;
}

Dataset generate_dataset(const Scenario& s, int n_samples, int m, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("generate_dataset: n_samples must be >= 1");
  for (int a = 0; a < 3; ++a) {
    if (s.room.grid_min[a] > s.room.grid_max[a])
      throw std::invalid_argument("generate_dataset: inverted user grid");
  }
  const double dims[3] = {s.room.width, s.room.length, s.room.height};
  for (int a = 0; a < 3; ++a)
    if (s.room.grid_min[a] < -1e-9 || s.room.grid_max[a] > dims[a] + 1e-9)
      throw std::invalid_argument("generate_dataset: user grid outside the room");

  Codebook cb_ap = dft_codebook(s.ap_array.horizontal, s.ap_array.vertical);
  Codebook cb_ut = dft_codebook(s.ut_array.horizontal, s.ut_array.vertical);

  Dataset ds;
  ds.scenario = s;
  ds.seed = seed;
  ds.m = m;
  ds.samples.reserve(static_cast<size_t>(n_samples));
  // TODO: chunk this loop over a worker pool; per-index streams already make
  // the result independent of worker count.
  for (int i = 0; i < n_samples; ++i)
    ds.samples.push_back(
        generate_sample(s, cb_ap, cb_ut, seed, static_cast<std::uint64_t>(i), m));
  return ds;
}

Dataset mix_blockage(const Dataset& d_blocked, const Dataset& d_unblocked, double p,
                     std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("mix_blockage: p outside [0, 1]");
  if (scenario_hash_ignoring_blockage(d_blocked.scenario) !=
      scenario_hash_ignoring_blockage(d_unblocked.scenario))
    throw std::invalid_argument("mix_blockage: scenario mismatch");
  if (d_blocked.size() != d_unblocked.size() || d_blocked.m != d_unblocked.m)
    throw std::invalid_argument("mix_blockage: size/labeling mismatch");

  Dataset out;
  out.scenario = d_unblocked.scenario;
  out.scenario.blockage.p_los = p;  // nominal mixture rate
  out.seed = seed;
  out.m = d_blocked.m;
  out.samples.reserve(d_blocked.size());
  Rng rng(seed);
  for (size_t i = 0; i < d_blocked.size(); ++i)
    out.samples.push_back(rng.uniform() < p ? d_blocked.samples[i] : d_unblocked.samples[i]);
  return out;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> kfold_split(size_t n, int k,
                                                                       std::uint64_t seed) {
  if (k < 2 || static_cast<size_t>(k) > n) throw std::invalid_argument("kfold_split: invalid k");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (size_t i = n - 1; i > 0; --i) {
    size_t j = static_cast<size_t>(rng.next_u64() % (i + 1));
    std::swap(perm[i], perm[j]);
  }

  std::vector<std::pair<std::vector<int>, std::vector<int>>> folds;
  folds.reserve(static_cast<size_t>(k));
  for (int f = 0; f < k; ++f) {
    const size_t begin = n * static_cast<size_t>(f) / static_cast<size_t>(k);
    const size_t end = n * static_cast<size_t>(f + 1) / static_cast<size_t>(k);
    std::vector<int> test(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                          perm.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<int> train;
    train.reserve(n - (end - begin));
    train.insert(train.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(begin));
    train.insert(train.end(), perm.begin() + static_cast<std::ptrdiff_t>(end), perm.end());
    folds.emplace_back(std::move(train), std::move(test));
  }
  return folds;
}

Sample perturb_ci(const Sample& sample, double sigma_p, double sigma_psi, Rng& rng) {
  if (sigma_p < 0.0 || sigma_psi < 0.0) throw std::invalid_argument("perturb_ci: negative sigma");
  Sample out = sample;
  for (int a = 0; a < 3; ++a) out.pose.position[a] += rng.gaussian(0.0, sigma_p);
  for (int a = 0; a < 3; ++a) out.pose.orientation[a] += rng.gaussian(0.0, sigma_psi);
  return out;
}

void apply_ci_perturbation(Dataset& ds, double sigma_p, double sigma_psi, std::uint64_t seed) {
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    Rng rng = Rng::stream(seed, i);
    ds.samples[i] = perturb_ci(ds.samples[i], sigma_p, sigma_psi, rng);
  }
}

namespace {
constexpr char kDatasetMagic[] = "BSIM1";
constexpr int kDatasetVersion = 1;
}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  json header;
  header["version"] = kDatasetVersion;
  header["scenario"] = json::parse(scenario_to_json(ds.scenario));
  header["n_samples"] = ds.samples.size();
  header["m"] = ds.m;
  header["seed"] = ds.seed;
  header["config_hash"] = scenario_hash(ds.scenario);

  io::write_magic(os, kDatasetMagic);
  io::write_text_block(os, header.dump());

  const int n_pairs = ds.scenario.ap_array.count() * ds.scenario.ut_array.count();
  for (const Sample& s : ds.samples) {
    if (s.gains.pairs() != n_pairs || s.phases.pairs() != n_pairs ||
        s.label.size() != static_cast<size_t>(ds.m))
      throw std::runtime_error("write_dataset: inconsistent sample");
    for (int a = 0; a < 3; ++a) io::write_pod<double>(os, s.pose.position[a]);
    for (int a = 0; a < 3; ++a) io::write_pod<double>(os, s.pose.orientation[a]);
    for (double v : s.gains.values) io::write_pod<float>(os, static_cast<float>(v));
    for (double v : s.phases.values) io::write_pod<float>(os, static_cast<float>(v));
    io::write_pod<std::uint64_t>(os, s.noise_seed);
    for (std::uint32_t v : s.label) io::write_pod<std::uint32_t>(os, v);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);

  io::expect_magic(is, kDatasetMagic);
  json header = json::parse(io::read_text_block(is));
  if (header.at("version").get<int>() != kDatasetVersion)
    throw std::runtime_error("unsupported dataset version");

  Dataset ds;
  ds.scenario = scenario_from_json(header.at("scenario").dump());
  ds.seed = header.at("seed").get<std::uint64_t>();
  ds.m = header.at("m").get<int>();
  const auto n = header.at("n_samples").get<std::uint64_t>();
  if (header.at("config_hash").get<std::uint64_t>() != scenario_hash(ds.scenario))
    throw std::runtime_error("dataset config hash does not match its scenario");

  const int n_ap = ds.scenario.ap_array.count();
  const int n_ut = ds.scenario.ut_array.count();
  ds.samples.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Sample s;
    s.m = ds.m;
    for (int a = 0; a < 3; ++a) s.pose.position[a] = io::read_pod<double>(is);
    for (int a = 0; a < 3; ++a) s.pose.orientation[a] = io::read_pod<double>(is);
    s.gains = GainMatrix(n_ap, n_ut);
    for (double& v : s.gains.values) v = static_cast<double>(io::read_pod<float>(is));
    s.phases = PhaseMatrix(n_ap, n_ut);
    for (double& v : s.phases.values) v = static_cast<double>(io::read_pod<float>(is));
    s.noise_seed = io::read_pod<std::uint64_t>(is);
    s.label.resize(static_cast<size_t>(ds.m));
    for (auto& v : s.label) v = io::read_pod<std::uint32_t>(is);
    ds.samples.push_back(std::move(s));
  }
  // Record count must match the header exactly.
  char extra;
  if (is.read(&extra, 1); is.gcount() != 0)
    throw std::runtime_error("dataset has trailing bytes beyond the declared record count");
  return ds;
}

}  // namespace beamsim
