// SPDX-License-Identifier: Apache-2.0

#include "beamsim/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "io.hpp"
#include "json.hpp"

namespace beamsim {

namespace {
constexpr double kLogFloor = 1e-12;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

HeadKind head_from_string(const std::string& name) {
  if (name == "ST") return HeadKind::SingleTask;
  if (name == "MT") return HeadKind::MultiTask;
  if (name == "EMT") return HeadKind::ExtendedMultiTask;
  throw std::invalid_argument("unknown head structure: " + name + " (expected ST, MT or EMT)");
}

std::string head_to_string(HeadKind head) {
  switch (head) {
    case HeadKind::SingleTask: return "ST";
    case HeadKind::MultiTask: return "MT";
    case HeadKind::ExtendedMultiTask: return "EMT";
  }
  throw std::logic_error("bad head kind");
}

arma::vec FeatureScaler::apply(const Pose& pose) const {
  arma::vec x(6);
  for (int a = 0; a < 3; ++a) {
    const double span = pos_max[a] - pos_min[a];
    x[a] = span > 0.0 ? 2.0 * (pose.position[a] - pos_min[a]) / span - 1.0 : 0.0;
  }
  for (int a = 0; a < 3; ++a) x[3 + a] = pose.orientation[a] / M_PI;
  return x;
}

FeatureScaler scaler_from_scenario(const Scenario& s) {
  return FeatureScaler{s.room.grid_min, s.room.grid_max};
}

int head_output_dim(HeadKind head, const ArrayDims& ap, const ArrayDims& ut) {
  switch (head) {
    case HeadKind::SingleTask: return ap.count() * ut.count();
    case HeadKind::MultiTask: return ap.count() + ut.count();
    case HeadKind::ExtendedMultiTask:
      return ap.horizontal + ap.vertical + ut.horizontal + ut.vertical;
  }
  throw std::logic_error("bad head kind");
}

std::vector<std::pair<int, int>> MlpModel::group_ranges() const {
  switch (head) {
    case HeadKind::SingleTask:
      return {{0, pair_count()}};
    case HeadKind::MultiTask:
      return {{0, ap_array.count()}, {ap_array.count(), ap_array.count() + ut_array.count()}};
    case HeadKind::ExtendedMultiTask: {
      std::vector<std::pair<int, int>> groups;
      int off = 0;
      for (int len : {ap_array.horizontal, ap_array.vertical, ut_array.horizontal,
                      ut_array.vertical}) {
        groups.emplace_back(off, off + len);
        off += len;
      }
      return groups;
    }
  }
  throw std::logic_error("bad head kind");
}

int MlpModel::output_layer_parameter_count() const {
  return static_cast<int>(weights.back().n_elem + biases.back().n_elem);
}

MlpModel init_model(HeadKind head, const ArrayDims& ap, const ArrayDims& ut, int n_hidden,
                    int width, const FeatureScaler& scaler, Rng& rng) {
  if (n_hidden < 1 || width < 1) throw std::invalid_argument("init_model: bad layer sizes");
  MlpModel m;
  m.head = head;
  m.ap_array = ap;
  m.ut_array = ut;
  m.scaler = scaler;

  std::vector<int> dims;
  dims.push_back(6);
  for (int i = 0; i < n_hidden; ++i) dims.push_back(width);
  dims.push_back(head_output_dim(head, ap, ut));

  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const double lim = std::sqrt(6.0 / (fan_in + fan_out));
    arma::mat w(static_cast<arma::uword>(fan_out), static_cast<arma::uword>(fan_in));
    for (arma::uword r = 0; r < w.n_rows; ++r)
      for (arma::uword c = 0; c < w.n_cols; ++c) w(r, c) = rng.uniform(-lim, lim);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(static_cast<arma::uword>(fan_out), arma::fill::zeros);
  }
  return m;
}

namespace {

// Per-column, per-group stabilized softmax in place.
void softmax_groups(arma::mat& z, const std::vector<std::pair<int, int>>& groups) {
  for (arma::uword c = 0; c < z.n_cols; ++c) {
    for (const auto& [begin, end] : groups) {
      double mx = -arma::datum::inf;
      for (int r = begin; r < end; ++r) mx = std::max(mx, z(static_cast<arma::uword>(r), c));
      double sum = 0.0;
      for (int r = begin; r < end; ++r) {
        double e = std::exp(z(static_cast<arma::uword>(r), c) - mx);
        z(static_cast<arma::uword>(r), c) = e;
        sum += e;
      }
      for (int r = begin; r < end; ++r) z(static_cast<arma::uword>(r), c) /= sum;
    }
  }
}

}  // namespace

void forward(const MlpModel& model, const arma::mat& x, bool train_mode, double dropout_rate,
             Rng* rng, ForwardWorkspace& ws) {
  if (!x.is_finite()) throw std::invalid_argument("forward: non-finite input");
  if (x.n_rows != 6) throw std::invalid_argument("forward: input must have 6 features");
  if (train_mode && dropout_rate > 0.0 && rng == nullptr)
    throw std::invalid_argument("forward: dropout requires an RNG");

  const int n_hidden = model.hidden_layers();
  ws.input = x;
  ws.acts.assign(static_cast<size_t>(n_hidden), arma::mat());
  ws.masks.clear();
  const bool use_dropout = train_mode && dropout_rate > 0.0;
  if (use_dropout) ws.masks.assign(static_cast<size_t>(n_hidden), arma::mat());

  arma::mat a = x;
  for (int l = 0; l < n_hidden; ++l) {
    arma::mat z = model.weights[static_cast<size_t>(l)] * a;
    z.each_col() += model.biases[static_cast<size_t>(l)];
    arma::mat t = arma::tanh(z);
    ws.acts[static_cast<size_t>(l)] = t;
    if (use_dropout) {
      arma::mat mask(t.n_rows, t.n_cols);
      const double keep_scale = 1.0 / (1.0 - dropout_rate);
      for (arma::uword c = 0; c < mask.n_cols; ++c)
        for (arma::uword r = 0; r < mask.n_rows; ++r)
          mask(r, c) = rng->uniform() < dropout_rate ? 0.0 : keep_scale;
      ws.masks[static_cast<size_t>(l)] = mask;
      a = t % mask;
    } else {
      a = std::move(t);
    }
  }

  arma::mat z = model.weights.back() * a;
  z.each_col() += model.biases.back();
  softmax_groups(z, model.group_ranges());
  ws.output = std::move(z);
}

arma::vec forward_probs(const MlpModel& model, const arma::vec& scaled_x) {
  ForwardWorkspace ws;
  forward(model, scaled_x, false, 0.0, nullptr, ws);
  return ws.output.col(0);
}

arma::vec combine_heads(const MlpModel& model, const arma::vec& output_probs) {
  const int n_ap = model.ap_array.count();
  const int n_ut = model.ut_array.count();
  switch (model.head) {
    case HeadKind::SingleTask:
      return output_probs;
    case HeadKind::MultiTask: {
      arma::vec o(static_cast<arma::uword>(n_ap) * n_ut);
      for (int i = 0; i < n_ap; ++i)
        for (int j = 0; j < n_ut; ++j)
          o[static_cast<arma::uword>(i * n_ut + j)] =
              output_probs[static_cast<arma::uword>(i)] *
              output_probs[static_cast<arma::uword>(n_ap + j)];
      return o;
    }
    case HeadKind::ExtendedMultiTask: {
      // Group order: AP azimuth, AP elevation, UT azimuth, UT elevation.
      // Per-end beam index is vertical-major: i = el * N_H + az.
      const int ap_h = model.ap_array.horizontal, ap_v = model.ap_array.vertical;
      const int ut_h = model.ut_array.horizontal;
      const int off_ap_el = ap_h;
      const int off_ut_az = ap_h + ap_v;
      const int off_ut_el = off_ut_az + ut_h;
      arma::vec o(static_cast<arma::uword>(n_ap) * n_ut);
      for (int i = 0; i < n_ap; ++i) {
        const double ot = output_probs[static_cast<arma::uword>(i % ap_h)] *
                          output_probs[static_cast<arma::uword>(off_ap_el + i / ap_h)];
        for (int j = 0; j < n_ut; ++j) {
          const double orr = output_probs[static_cast<arma::uword>(off_ut_az + j % ut_h)] *
                             output_probs[static_cast<arma::uword>(off_ut_el + j / ut_h)];
          o[static_cast<arma::uword>(i * n_ut + j)] = ot * orr;
        }
      }
      return o;
    }
  }
  throw std::logic_error("bad head kind");
}

arma::vec make_targets(const MlpModel& model, const std::vector<std::uint32_t>& label) {
  if (label.empty()) throw std::invalid_argument("make_targets: empty label");
  const int n_ut = model.ut_array.count();
  const double w = 1.0 / static_cast<double>(label.size());
  arma::vec t(static_cast<arma::uword>(model.output_dim()), arma::fill::zeros);
  for (std::uint32_t pair : label) {
    const int i = static_cast<int>(pair) / n_ut;  // AP beam
    const int j = static_cast<int>(pair) % n_ut;  // UT beam
    switch (model.head) {
      case HeadKind::SingleTask:
        t[pair] += w;
        break;
      case HeadKind::MultiTask:
        t[static_cast<arma::uword>(i)] += w;
        t[static_cast<arma::uword>(model.ap_array.count() + j)] += w;
        break;
      case HeadKind::ExtendedMultiTask: {
        const int ap_h = model.ap_array.horizontal, ap_v = model.ap_array.vertical;
        const int ut_h = model.ut_array.horizontal;
        t[static_cast<arma::uword>(i % ap_h)] += w;
        t[static_cast<arma::uword>(ap_h + i / ap_h)] += w;
        t[static_cast<arma::uword>(ap_h + ap_v + j % ut_h)] += w;
        t[static_cast<arma::uword>(ap_h + ap_v + ut_h + j / ut_h)] += w;
        break;
      }
    }
  }
  return t;
}

double loss_value(const arma::vec& output_probs, const arma::vec& targets,
                  const std::vector<std::pair<int, int>>& groups) {
  double loss = 0.0;
  for (const auto& [begin, end] : groups)
    for (int k = begin; k < end; ++k) {
      const double t = targets[static_cast<arma::uword>(k)];
      if (t > 0.0) loss -= t * std::log(std::max(output_probs[static_cast<arma::uword>(k)], kLogFloor));
    }
  return loss;
}

Gradients backward(const MlpModel& model, const ForwardWorkspace& ws, const arma::mat& targets) {
  const int n_hidden = model.hidden_layers();
  const bool use_dropout = !ws.masks.empty();

  Gradients g;
  g.w.resize(model.weights.size());
  g.b.resize(model.biases.size());

  auto dropped = [&](int l) -> arma::mat {
    return use_dropout ? arma::mat(ws.acts[static_cast<size_t>(l)] % ws.masks[static_cast<size_t>(l)])
                       : ws.acts[static_cast<size_t>(l)];
  };

  // Softmax + cross entropy per group: dL/dz = o - t.
  arma::mat delta = ws.output - targets;
  g.w.back() = delta * dropped(n_hidden - 1).t();
  g.b.back() = arma::sum(delta, 1);

  for (int l = n_hidden - 1; l >= 0; --l) {
    delta = model.weights[static_cast<size_t>(l) + 1].t() * delta;
    if (use_dropout) delta %= ws.masks[static_cast<size_t>(l)];
    delta %= (1.0 - arma::square(ws.acts[static_cast<size_t>(l)]));
    const arma::mat below = (l == 0) ? ws.input : dropped(l - 1);
    g.w[static_cast<size_t>(l)] = delta * below.t();
    g.b[static_cast<size_t>(l)] = arma::sum(delta, 1);
  }
  return g;
}

AdamState make_adam_state(const MlpModel& model) {
  AdamState st;
  for (const auto& w : model.weights) {
    st.m_w.emplace_back(arma::size(w), arma::fill::zeros);
    st.v_w.emplace_back(arma::size(w), arma::fill::zeros);
  }
  for (const auto& b : model.biases) {
    st.m_b.emplace_back(arma::size(b), arma::fill::zeros);
    st.v_b.emplace_back(arma::size(b), arma::fill::zeros);
  }
  return st;
}

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, double learning_rate) {
  if (grads.w.size() != model.weights.size() || grads.b.size() != model.biases.size())
    throw std::invalid_argument("adam_step: gradient/model shape mismatch");
  state.step += 1;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));

  for (size_t l = 0; l < model.weights.size(); ++l) {
    state.m_w[l] = kAdamBeta1 * state.m_w[l] + (1.0 - kAdamBeta1) * grads.w[l];
    state.v_w[l] = kAdamBeta2 * state.v_w[l] + (1.0 - kAdamBeta2) * arma::square(grads.w[l]);
    model.weights[l] -= learning_rate * (state.m_w[l] / c1) / (arma::sqrt(state.v_w[l] / c2) + kAdamEps);

    state.m_b[l] = kAdamBeta1 * state.m_b[l] + (1.0 - kAdamBeta1) * grads.b[l];
    state.v_b[l] = kAdamBeta2 * state.v_b[l] + (1.0 - kAdamBeta2) * arma::square(grads.b[l]);
    model.biases[l] -= learning_rate * (state.m_b[l] / c1) / (arma::sqrt(state.v_b[l] / c2) + kAdamEps);
  }
}

std::vector<double> train(MlpModel& model, const Dataset& ds, const std::vector<int>& train_indices,
                          const TrainConfig& cfg) {
  if (train_indices.empty()) throw std::invalid_argument("train: empty training split");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw std::invalid_argument("train: dropout must be in [0, 1)");

  const size_t n_train = train_indices.size();
  const int cap = static_cast<int>(std::min<size_t>(static_cast<size_t>(cfg.batch_cap), n_train));
  const int double_every = std::max(1, (cfg.epochs + 8) / 9);  // ceil(epochs / 9)
  const auto groups = model.group_ranges();

  // Scaled features and targets are fixed across epochs.
  arma::mat features(6, n_train);
  arma::mat targets(static_cast<arma::uword>(model.output_dim()), n_train);
  for (size_t k = 0; k < n_train; ++k) {
    const Sample& s = ds.samples[static_cast<size_t>(train_indices[k])];
    features.col(k) = model.scaler.apply(s.pose);
    targets.col(k) = make_targets(model, s.label);
  }

  Rng rng(cfg.seed);
  AdamState st = make_adam_state(model);
  ForwardWorkspace ws;
  std::vector<size_t> order(n_train);
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<double> history;
  history.reserve(static_cast<size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const long long grown = static_cast<long long>(cfg.batch_start) << (epoch / double_every);
    const int batch = static_cast<int>(std::min<long long>(grown, cap));

    for (size_t i = n_train - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(rng.next_u64() % (i + 1));
      std::swap(order[i], order[j]);
    }

    double loss_sum = 0.0;
    for (size_t start = 0; start < n_train; start += static_cast<size_t>(batch)) {
      const size_t b = std::min(static_cast<size_t>(batch), n_train - start);
      arma::mat x(6, b), t(targets.n_rows, b);
      for (size_t c = 0; c < b; ++c) {
        x.col(c) = features.col(order[start + c]);
        t.col(c) = targets.col(order[start + c]);
      }
      forward(model, x, true, cfg.dropout, &rng, ws);
      for (size_t c = 0; c < b; ++c) loss_sum += loss_value(ws.output.col(c), t.col(c), groups);

      Gradients g = backward(model, ws, t);
      const double inv_b = 1.0 / static_cast<double>(b);
      for (auto& gw : g.w) gw *= inv_b;
      for (auto& gb : g.b) gb *= inv_b;
      adam_step(model, g, st, cfg.learning_rate);
    }

    const double mean_loss = loss_sum / static_cast<double>(n_train);
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
    history.push_back(mean_loss);
  }
  return history;
}

std::vector<std::uint32_t> recommend(const MlpModel& model, const Pose& pose, int n_b) {
  const int n_pairs = model.pair_count();
  if (n_b < 1 || n_b > n_pairs) throw std::invalid_argument("recommend: n_b out of range");
  arma::vec o = combine_heads(model, forward_probs(model, model.scaler.apply(pose)));
  std::vector<std::uint32_t> idx(static_cast<size_t>(n_pairs));
  std::iota(idx.begin(), idx.end(), 0u);
  std::partial_sort(idx.begin(), idx.begin() + n_b, idx.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      const double pa = o[a], pb = o[b];
                      if (pa != pb) return pa > pb;
                      return a < b;
                    });
  idx.resize(static_cast<size_t>(n_b));
  return idx;
}

namespace {
constexpr char kModelMagic[] = "BSNN1";
constexpr int kModelVersion = 1;
}  // namespace

void write_model(const std::string& path, const MlpModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  nlohmann::json header;
  header["version"] = kModelVersion;
  header["head"] = head_to_string(model.head);
  header["ap_array"] = {model.ap_array.horizontal, model.ap_array.vertical};
  header["ut_array"] = {model.ut_array.horizontal, model.ut_array.vertical};
  header["hidden_layers"] = model.hidden_layers();
  header["hidden_width"] = model.hidden_width();
  header["scaler"] = {{"pos_min", {model.scaler.pos_min[0], model.scaler.pos_min[1], model.scaler.pos_min[2]}},
                      {"pos_max", {model.scaler.pos_max[0], model.scaler.pos_max[1], model.scaler.pos_max[2]}}};

  io::write_magic(os, kModelMagic);
  io::write_text_block(os, header.dump());
  for (size_t l = 0; l < model.weights.size(); ++l) {
    const arma::mat& w = model.weights[l];
    for (arma::uword r = 0; r < w.n_rows; ++r)
      for (arma::uword c = 0; c < w.n_cols; ++c) io::write_pod<double>(os, w(r, c));
    for (arma::uword r = 0; r < model.biases[l].n_elem; ++r)
      io::write_pod<double>(os, model.biases[l][r]);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

MlpModel read_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);

  io::expect_magic(is, kModelMagic);
  nlohmann::json header = nlohmann::json::parse(io::read_text_block(is));
  if (header.at("version").get<int>() != kModelVersion)
    throw std::runtime_error("unsupported model version");

  MlpModel m;
  m.head = head_from_string(header.at("head").get<std::string>());
  m.ap_array = {header.at("ap_array").at(0).get<int>(), header.at("ap_array").at(1).get<int>()};
  m.ut_array = {header.at("ut_array").at(0).get<int>(), header.at("ut_array").at(1).get<int>()};
  const int n_hidden = header.at("hidden_layers").get<int>();
  const int width = header.at("hidden_width").get<int>();
  if (n_hidden < 1 || width < 1) throw std::runtime_error("model header has bad layer sizes");
  for (int a = 0; a < 3; ++a) {
    m.scaler.pos_min[a] = header.at("scaler").at("pos_min").at(static_cast<size_t>(a)).get<double>();
    m.scaler.pos_max[a] = header.at("scaler").at("pos_max").at(static_cast<size_t>(a)).get<double>();
  }

  std::vector<int> dims;
  dims.push_back(6);
  for (int i = 0; i < n_hidden; ++i) dims.push_back(width);
  dims.push_back(head_output_dim(m.head, m.ap_array, m.ut_array));
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    arma::mat w(static_cast<arma::uword>(dims[l + 1]), static_cast<arma::uword>(dims[l]));
    for (arma::uword r = 0; r < w.n_rows; ++r)
      for (arma::uword c = 0; c < w.n_cols; ++c) w(r, c) = io::read_pod<double>(is);
    arma::vec b(static_cast<arma::uword>(dims[l + 1]));
    for (arma::uword r = 0; r < b.n_elem; ++r) b[r] = io::read_pod<double>(is);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  char extra;
  if (is.read(&extra, 1); is.gcount() != 0)
    throw std::runtime_error("model file does not match its declared dimensions");
  return m;
}

}  // namespace beamsim
