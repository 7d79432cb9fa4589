// SPDX-License-Identifier: Apache-2.0

#include "beamsim/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "io.hpp"
#include "json.hpp"

namespace beamsim {

namespace {

int bins_for(double range, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("gifp: bin size must be positive");
  // The epsilon absorbs one-ulp noise from unit conversions (e.g. 22.5 deg
  // must give exactly 16 alpha bins); max handles zero-extent dimensions.
  return std::max(1, static_cast<int>(std::ceil(range / delta - 1e-9)));
}

int ilog2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  return k;
}

}  // namespace

size_t GifpGeometry::bin_count() const {
  size_t total = 1;
  for (int c : count) total *= static_cast<size_t>(c);
  return total;
}

GifpGeometry gifp_geometry(const Scenario& s, double delta_s, double delta_a) {
  GifpGeometry g;
  const double ang_min[3] = {-kAlphaHalfRange, -kBetaGammaHalfRange, -kBetaGammaHalfRange};
  const double ang_range[3] = {2.0 * kAlphaHalfRange, 2.0 * kBetaGammaHalfRange,
                               2.0 * kBetaGammaHalfRange};
  for (int a = 0; a < 3; ++a) {
    g.origin[static_cast<size_t>(a)] = s.room.grid_min[a];
    g.delta[static_cast<size_t>(a)] = delta_s;
    g.count[static_cast<size_t>(a)] = bins_for(s.room.grid_max[a] - s.room.grid_min[a], delta_s);
    g.origin[static_cast<size_t>(3 + a)] = ang_min[a];
    g.delta[static_cast<size_t>(3 + a)] = delta_a;
    g.count[static_cast<size_t>(3 + a)] = bins_for(ang_range[a], delta_a);
  }
  return g;
}

size_t gifp_bin_index(const Pose& pose, const GifpGeometry& geom) {
  const double coords[6] = {pose.position[0],    pose.position[1],    pose.position[2],
                            pose.orientation[0], pose.orientation[1], pose.orientation[2]};
  size_t id = 0;
  for (int d = 0; d < 6; ++d) {
    const auto dd = static_cast<size_t>(d);
    int idx = static_cast<int>(std::floor((coords[d] - geom.origin[dd]) / geom.delta[dd]));
    idx = std::clamp(idx, 0, geom.count[dd] - 1);
    id = id * static_cast<size_t>(geom.count[dd]) + static_cast<size_t>(idx);
  }
  return id;
}

GifpTable gifp_train(const Dataset& ds, double delta_s, double delta_a) {
  if (ds.samples.empty()) throw std::invalid_argument("gifp_train: empty dataset");

  GifpTable table;
  table.geometry = gifp_geometry(ds.scenario, delta_s, delta_a);
  table.n_ap_beams = ds.scenario.ap_array.count();
  table.n_ut_beams = ds.scenario.ut_array.count();
  const size_t n_bins = table.geometry.bin_count();
  const int n_pairs = table.n_ap_beams * table.n_ut_beams;

  // Top-1 counts per bin (only the best pair counts, also for M > 1 labels).
  std::vector<std::map<std::uint32_t, int>> counts(n_bins);
  std::map<std::uint32_t, int> global_counts;
  for (const Sample& s : ds.samples) {
    const std::uint32_t best = s.label.front();
    counts[gifp_bin_index(s.pose, table.geometry)][best] += 1;
    global_counts[best] += 1;
  }

  auto by_frequency = [](const std::map<std::uint32_t, int>& m) {
    std::vector<std::pair<std::uint32_t, int>> items(m.begin(), m.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::vector<std::uint32_t> order;
    order.reserve(items.size());
    for (const auto& [pair, cnt] : items) order.push_back(pair);
    return order;
  };

  table.bin_lists.resize(n_bins);
  for (size_t b = 0; b < n_bins; ++b)
    if (!counts[b].empty()) table.bin_lists[b] = by_frequency(counts[b]);

  // Fallback covers every pair: observed pairs by frequency, then the rest
  // in ascending index order.
  table.fallback = by_frequency(global_counts);
  std::vector<bool> seen(static_cast<size_t>(n_pairs), false);
  for (std::uint32_t p : table.fallback) seen[p] = true;
  for (int p = 0; p < n_pairs; ++p)
    if (!seen[static_cast<size_t>(p)]) table.fallback.push_back(static_cast<std::uint32_t>(p));
  return table;
}

std::vector<std::uint32_t> gifp_recommend(const GifpTable& table, const Pose& pose, int n_b) {
  const int n_pairs = table.n_ap_beams * table.n_ut_beams;
  if (n_b < 1 || n_b > n_pairs) throw std::invalid_argument("gifp_recommend: n_b out of range");

  const auto& bin = table.bin_lists[gifp_bin_index(pose, table.geometry)];
  std::vector<std::uint32_t> out;
  out.reserve(static_cast<size_t>(n_b));
  std::vector<bool> used(static_cast<size_t>(n_pairs), false);
  for (std::uint32_t p : bin) {
    if (static_cast<int>(out.size()) == n_b) return out;
    out.push_back(p);
    used[p] = true;
  }
  for (std::uint32_t p : table.fallback) {
    if (static_cast<int>(out.size()) == n_b) break;
    if (!used[p]) {
      out.push_back(p);
      used[p] = true;
    }
  }
  return out;
}

namespace {
constexpr char kGifpMagic[] = "BSGT1";
constexpr int kGifpVersion = 1;
}  // namespace

void write_gifp_table(const std::string& path, const GifpTable& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  nlohmann::json header;
  header["version"] = kGifpVersion;
  header["origin"] = table.geometry.origin;
  header["delta"] = table.geometry.delta;
  header["count"] = table.geometry.count;
  header["n_ap_beams"] = table.n_ap_beams;
  header["n_ut_beams"] = table.n_ut_beams;
  header["n_bins"] = table.bin_lists.size();

  io::write_magic(os, kGifpMagic);
  io::write_text_block(os, header.dump());
  io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(table.fallback.size()));
  for (std::uint32_t p : table.fallback) io::write_pod<std::uint32_t>(os, p);
  for (const auto& bin : table.bin_lists) {
    io::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(bin.size()));
    for (std::uint32_t p : bin) io::write_pod<std::uint32_t>(os, p);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

GifpTable read_gifp_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);

  io::expect_magic(is, kGifpMagic);
  nlohmann::json header = nlohmann::json::parse(io::read_text_block(is));
  if (header.at("version").get<int>() != kGifpVersion)
    throw std::runtime_error("unsupported GIFP table version");

  GifpTable table;
  for (size_t d = 0; d < 6; ++d) {
    table.geometry.origin[d] = header.at("origin").at(d).get<double>();
    table.geometry.delta[d] = header.at("delta").at(d).get<double>();
    table.geometry.count[d] = header.at("count").at(d).get<int>();
  }
  table.n_ap_beams = header.at("n_ap_beams").get<int>();
  table.n_ut_beams = header.at("n_ut_beams").get<int>();
  const auto n_bins = header.at("n_bins").get<std::uint64_t>();
  if (n_bins != table.geometry.bin_count())
    throw std::runtime_error("GIFP table bin count does not match its geometry");

  auto read_list = [&is]() {
    auto len = io::read_pod<std::uint32_t>(is);
    std::vector<std::uint32_t> v(len);
    for (auto& p : v) p = io::read_pod<std::uint32_t>(is);
    return v;
  };
  table.fallback = read_list();
  table.bin_lists.resize(n_bins);
  for (auto& bin : table.bin_lists) bin = read_list();
  char extra;
  if (is.read(&extra, 1); is.gcount() != 0)
    throw std::runtime_error("GIFP table file has trailing bytes beyond its bin lists");
  return table;
}

HbsResult hbs_run(const RssOracle& oracle, const ArrayDims& ap, const ArrayDims& ut) {
  auto pow2 = [](int n) { return n >= 1 && (n & (n - 1)) == 0; };
  if (!pow2(ap.horizontal) || !pow2(ap.vertical) || !pow2(ut.horizontal) || !pow2(ut.vertical))
    throw std::invalid_argument("hbs_run: array dims must be powers of two");

  HbsResult res;
  const arma::cx_vec ap_omni = deact_codeword(0, 0, 1, 1, ap.horizontal, ap.vertical);

  // Two-phase level schedule for one device: vertical levels first with the
  // horizontal part omnidirectional, then horizontal levels at the selected
  // full-resolution vertical codeword. Each level senses two codewords and
  // keeps the higher-RSS child (ties to the smaller index).
  auto search_device = [&](const ArrayDims& dims, auto&& sense, int& n_h, int& n_v,
                           bool count_feedback) {
    n_h = 1;
    n_v = 1;
    const int log_v = ilog2(dims.vertical);
    const int log_h = ilog2(dims.horizontal);
    for (int k_v = 1; k_v <= log_v; ++k_v) {
      const int c1 = 2 * n_v - 1, c2 = 2 * n_v;
      const double r1 = sense(deact_codeword(0, k_v, 1, c1, dims.horizontal, dims.vertical));
      const double r2 = sense(deact_codeword(0, k_v, 1, c2, dims.horizontal, dims.vertical));
      res.sensed_pairs += 2;
      if (count_feedback) res.feedbacks += 1;
      n_v = (r1 >= r2) ? c1 : c2;
    }
    for (int k_h = 1; k_h <= log_h; ++k_h) {
      const int c1 = 2 * n_h - 1, c2 = 2 * n_h;
      const double r1 = sense(deact_codeword(k_h, log_v, c1, n_v, dims.horizontal, dims.vertical));
      const double r2 = sense(deact_codeword(k_h, log_v, c2, n_v, dims.horizontal, dims.vertical));
      res.sensed_pairs += 2;
      if (count_feedback) res.feedbacks += 1;
      n_h = (r1 >= r2) ? c1 : c2;
    }
  };

  // UT searches first while the AP radiates from a single active element.
  search_device(ut, [&](const arma::cx_vec& w) { return oracle(ap_omni, w); }, res.ut_n_h,
                res.ut_n_v, false);

  const arma::cx_vec ut_selected = deact_codeword(ilog2(ut.horizontal), ilog2(ut.vertical),
                                                  res.ut_n_h, res.ut_n_v, ut.horizontal,
                                                  ut.vertical);
  // AP search; the UT reports the winner of each level, one feedback per level.
  search_device(ap, [&](const arma::cx_vec& w) { return oracle(w, ut_selected); }, res.ap_n_h,
                res.ap_n_v, true);

  res.ut_beam = static_cast<std::uint32_t>((res.ut_n_v - 1) * ut.horizontal + (res.ut_n_h - 1));
  res.ap_beam = static_cast<std::uint32_t>((res.ap_n_v - 1) * ap.horizontal + (res.ap_n_h - 1));
  return res;
}

}  // namespace beamsim
