#pragma once

// Modular neural GSM detection: one sub-net estimates per-antenna activation
// probabilities (sigmoid head), n_rf sub-nets classify the symbol on each
// active slot (softmax heads), and a selector assembles a vector that is
// always inside the signal set. Also carries the joint single-net baseline
// and the MMSE-preprocessed front end for varying channels.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "gsmdet/channel.hpp"
#include "gsmdet/detectors.hpp"
#include "gsmdet/gsm.hpp"
#include "gsmdet/kvfile.hpp"
#include "gsmdet/mlp.hpp"

namespace gsmdet {

enum class InputMode { RawY, MmsePreprocessed };

inline const char* to_string(InputMode m) {
  return m == InputMode::RawY ? "raw" : "mmse";
}

// Stacks [Re(y); Im(y)], the real input vector the nets consume.
inline RVector featurize(const CVector& y) {
  RVector f(2 * y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    f[i] = y[i].real();
    f[y.size() + i] = y[i].imag();
  }
  return f;
}

inline void featurize_into(const CVector& y, RVector& f) {
  f.resize(2 * y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    f[i] = y[i].real();
    f[y.size() + i] = y[i].imag();
  }
}

inline CVector defeaturize(const RVector& f) {
  detail::require(f.size() % 2 == 0, "defeaturize: odd length");
  const std::size_t n = f.size() / 2;
  CVector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = {f[i], f[n + i]};
  return y;
}

struct ModularDetector {
  Mlp aap_net;
  std::vector<Mlp> symbol_nets;
  GsmConfig cfg;
  InputMode input_mode = InputMode::RawY;
  std::vector<Aap> patterns;  // valid AAPs in rank order
  bool trained = false;
};

struct TrainingSet {
  std::vector<RVector> inputs;
  std::vector<RVector> aap_labels;                  // n_t-length 0/1 masks
  std::vector<std::vector<RVector>> symbol_labels;  // [slot][example], one-hot
  double snr_db = 0;
  int m_T = 0;
};

// Pilot-phase data: random GSM vectors through the channel at the training
// SNR. In Varying mode every example sees a fresh channel draw.
inline TrainingSet make_training_set(const Channel& chan, const GsmConfig& cfg, int m_T,
                                     double snr_db, const NoiseModel& noise_shape,
                                     InputMode mode, Rng& rng) {
  detail::require(m_T >= 1, "make_training_set: m_T must be >= 1");
  const double snr_linear = SnrPoint::from_db(snr_db).snr_linear;
  double power;
  if (chan.mode == ChannelMode::Static) {
    detail::require(chan.h.rows() == cfg.n_r && chan.h.cols() == cfg.n_t,
                    "make_training_set: channel shape mismatch");
    power = mean_signal_power(chan.h, enumerate_signal_set(cfg));
  } else {
    power = mean_signal_power_varying(cfg);
  }
  const NoiseModel model =
      noise_shape.with_sigma2(noise_variance_for_snr(power, cfg.n_r, snr_linear));
  NoiseSampler sampler(model, cfg.n_r);

  TrainingSet ts;
  ts.snr_db = snr_db;
  ts.m_T = m_T;
  ts.inputs.reserve(m_T);
  ts.aap_labels.reserve(m_T);
  ts.symbol_labels.assign(cfg.n_rf, {});
  for (auto& v : ts.symbol_labels) v.reserve(m_T);

  const int rate = cfg.rate_bits();
  const int bps = cfg.alphabet.bits_per_symbol;
  const int n_points = static_cast<int>(cfg.alphabet.points.size());
  BitString bits(rate);
  CVector y, noise;
  for (int e = 0; e < m_T; ++e) {
    uint_to_bits(rng.bits(rate), rate, bits, 0);
    const GsmVector x = bits_to_gsm_vector(bits, cfg);
    const CMatrix h =
        chan.mode == ChannelMode::Static ? chan.h : draw_channel(cfg.n_r, cfg.n_t, rng);
    cmatvec_into(h, x.symbols, y);
    sampler.sample_into(rng, noise);
    for (int i = 0; i < cfg.n_r; ++i) y[i] += noise[i];

    if (mode == InputMode::MmsePreprocessed) {
      ts.inputs.push_back(featurize(mmse_preprocess(y, h, snr_linear)));
    } else {
      ts.inputs.push_back(featurize(y));
    }
    RVector mask(cfg.n_t);
    for (int i = 0; i < cfg.n_t; ++i) mask[i] = x.aap.mask[i];
    ts.aap_labels.push_back(std::move(mask));
    for (int s = 0; s < cfg.n_rf; ++s) {
      const int idx =
          static_cast<int>(bits_to_uint(x.bits, cfg.aap_bits() + s * bps, bps));
      RVector onehot(n_points, 0.0);
      onehot[idx] = 1.0;
      ts.symbol_labels[s].push_back(std::move(onehot));
    }
  }
  return ts;
}

// Index into the rank-ordered valid set of the pattern picked from the
// activation probabilities: the n_rf highest values when that pattern is
// valid (ties to the lower antenna index), otherwise the valid pattern with
// the largest Bernoulli log likelihood (ties to the lower rank).
inline std::size_t select_aap_index(const RVector& probs, const std::vector<Aap>& valid,
                                    int n_rf) {
  const int n_t = static_cast<int>(probs.size());
  detail::require(n_rf >= 1 && n_rf <= n_t, "select_aap: bad n_rf");
  // top-n_rf by (probability desc, index asc)
  std::vector<int> idx(n_t);
  for (int i = 0; i < n_t; ++i) idx[i] = i;
  std::partial_sort(idx.begin(), idx.begin() + n_rf, idx.end(), [&](int a, int b) {
    return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
  });
  std::vector<int> top(idx.begin(), idx.begin() + n_rf);
  std::sort(top.begin(), top.end());
  for (std::size_t p = 0; p < valid.size(); ++p)
    if (valid[p].active == top) return p;

  // Maximum-likelihood repair over the valid set, treating the outputs as
  // independent Bernoulli probabilities.
  std::vector<double> lp(n_t), lq(n_t);
  for (int i = 0; i < n_t; ++i) {
    const double p = detail::clamp_prob(probs[i]);
    lp[i] = std::log(p);
    lq[i] = std::log(1.0 - p);
  }
  std::size_t best = 0;
  double best_score = -1e308;
  for (std::size_t p = 0; p < valid.size(); ++p) {
    double score = 0;
    for (int i = 0; i < n_t; ++i) score += valid[p].mask[i] ? lp[i] : lq[i];
    if (score > best_score) {
      best_score = score;
      best = p;
    }
  }
  return best;
}

inline Aap select_aap(const RVector& probs, const std::vector<Aap>& valid, int n_rf) {
  return valid[select_aap_index(probs, valid, n_rf)];
}

struct ModularScratch {
  RVector feat;
  MlpScratch net;
  CVector z;
};

// Detected bit string for one received vector. `h` and `snr_linear` are only
// consulted in MmsePreprocessed mode.
inline void detect_bits(const ModularDetector& det, const CVector& y, const CMatrix* h,
                        double snr_linear, ModularScratch& s, BitString& out) {
  if (!det.trained) throw config_error("ModularDetector: detect called before training");
  if (det.input_mode == InputMode::MmsePreprocessed) {
    detail::require(h != nullptr, "detect: MMSE-preprocessed mode needs the channel");
    s.z = mmse_preprocess(y, *h, snr_linear);
    featurize_into(s.z, s.feat);
  } else {
    featurize_into(y, s.feat);
  }
  const GsmConfig& cfg = det.cfg;
  const RVector& probs = forward_into(det.aap_net, s.feat, s.net);
  const std::size_t rank = select_aap_index(probs, det.patterns, cfg.n_rf);
  out.assign(cfg.rate_bits(), 0);
  uint_to_bits(rank, cfg.aap_bits(), out, 0);
  const int bps = cfg.alphabet.bits_per_symbol;
  for (int i = 0; i < cfg.n_rf; ++i) {
    const RVector& p = forward_into(det.symbol_nets[i], s.feat, s.net);
    uint_to_bits(static_cast<std::uint64_t>(argmax(p)), bps, out, cfg.aap_bits() + i * bps);
  }
}

inline DetectionResult detect(const ModularDetector& det, const CVector& y,
                              const CMatrix* h = nullptr, double snr_linear = 0) {
  ModularScratch s;
  BitString bits;
  detect_bits(det, y, h, snr_linear, s, bits);
  DetectionResult r;
  r.x_hat = bits_to_gsm_vector(bits, det.cfg);
  r.bits_hat = bits;
  // Joint negative log likelihood of the decision under the net outputs.
  const RVector& ap = forward_into(det.aap_net, s.feat, s.net);
  double nll = 0;
  for (int i = 0; i < det.cfg.n_t; ++i) {
    const double p = detail::clamp_prob(ap[i]);
    nll -= r.x_hat.aap.mask[i] ? std::log(p) : std::log(1.0 - p);
  }
  for (int i = 0; i < det.cfg.n_rf; ++i) {
    const RVector& sp = forward_into(det.symbol_nets[i], s.feat, s.net);
    nll -= std::log(detail::clamp_prob(sp[argmax(sp)]));
  }
  r.metric = nll;
  return r;
}

// ---------------------------------------------------------------------------
// Presets: the four bundled system/architecture combinations. Hidden stacks
// are ReLU; heads are sigmoid (AAP) and softmax (symbols).
// ---------------------------------------------------------------------------

struct DnnPreset {
  std::string id;
  int n_t, n_rf, n_r;
  ModScheme scheme;
  std::vector<int> aap_layers;  // full size chain including input and output
  std::vector<int> sym_layers;
  InputMode input_mode;
  ChannelMode channel_mode;
  int m_T;
  double train_snr_db;
  int epochs;
  std::string notes;

  GsmConfig gsm() const {
    return GsmConfig(n_t, n_rf, n_r,
                     scheme == ModScheme::Bpsk ? ModAlphabet::bpsk() : ModAlphabet::qam4());
  }
};

inline const std::vector<DnnPreset>& dnn_presets() {
  static const std::vector<DnnPreset> presets = {
      {"fig2", 4, 2, 4, ModScheme::Bpsk,
       {8, 16, 16, 8, 4}, {8, 16, 16, 8, 2},
       InputMode::RawY, ChannelMode::Static, 10000, 10.0, 20,
       "small system, static channel"},
      {"fig3a", 8, 4, 8, ModScheme::Bpsk,
       {16, 128, 64, 32, 16, 8}, {16, 32, 16, 8, 4, 2},
       InputMode::RawY, ChannelMode::Static, 50000, 10.0, 50,
       "mid-scale system; n_rf=4 assumed"},
      {"fig3b", 16, 2, 16, ModScheme::Bpsk,
       {32, 320, 160, 80, 40, 20, 16}, {32, 128, 64, 32, 16, 8, 2},
       InputMode::RawY, ChannelMode::Static, 50000, 5.0, 10,
       "large system; n_rf=2 assumed"},
      {"fig6", 4, 2, 12, ModScheme::Bpsk,
       {8, 320, 256, 128, 64, 32, 4}, {8, 320, 256, 128, 64, 32, 2},
       InputMode::MmsePreprocessed, ChannelMode::Varying, 40000, 3.0, 10,
       "varying channel with MMSE preprocessing; keeps the small-system "
       "transmitter with a taller receive array (n_r assumed), trained mid-grid"},
  };
  return presets;
}

inline const DnnPreset& dnn_preset(const std::string& id) {
  for (const DnnPreset& p : dnn_presets())
    if (p.id == id) return p;
  throw config_error("unknown preset: " + id);
}

// Untrained modular detector with the preset's exact layer listing.
inline ModularDetector build_preset_detector(const std::string& preset_id) {
  const DnnPreset& p = dnn_preset(preset_id);
  const GsmConfig cfg = p.gsm();
  std::vector<Activation> aap_acts(p.aap_layers.size() - 1, Activation::ReLU);
  aap_acts.back() = Activation::Sigmoid;
  std::vector<Activation> sym_acts(p.sym_layers.size() - 1, Activation::ReLU);
  sym_acts.back() = Activation::Softmax;
  ModularDetector det{Mlp::zeros(p.aap_layers, aap_acts),
                      {},
                      cfg,
                      p.input_mode,
                      valid_aaps(cfg.n_t, cfg.n_rf),
                      false};
  for (int i = 0; i < cfg.n_rf; ++i)
    det.symbol_nets.push_back(Mlp::zeros(p.sym_layers, sym_acts));
  return det;
}

// Custom-architecture variant: hidden layer widths only, heads appended.
inline ModularDetector build_modular_detector(const GsmConfig& cfg,
                                              const std::vector<int>& aap_hidden,
                                              const std::vector<int>& sym_hidden,
                                              InputMode mode) {
  const int in = 2 * (mode == InputMode::MmsePreprocessed ? cfg.n_t : cfg.n_r);
  std::vector<int> aap_sizes{in};
  aap_sizes.insert(aap_sizes.end(), aap_hidden.begin(), aap_hidden.end());
  aap_sizes.push_back(cfg.n_t);
  std::vector<int> sym_sizes{in};
  sym_sizes.insert(sym_sizes.end(), sym_hidden.begin(), sym_hidden.end());
  sym_sizes.push_back(static_cast<int>(cfg.alphabet.points.size()));
  std::vector<Activation> aap_acts(aap_sizes.size() - 1, Activation::ReLU);
  aap_acts.back() = Activation::Sigmoid;
  std::vector<Activation> sym_acts(sym_sizes.size() - 1, Activation::ReLU);
  sym_acts.back() = Activation::Softmax;
  ModularDetector det{Mlp::zeros(aap_sizes, aap_acts),
                      {},
                      cfg,
                      mode,
                      valid_aaps(cfg.n_t, cfg.n_rf),
                      false};
  for (int i = 0; i < cfg.n_rf; ++i) det.symbol_nets.push_back(Mlp::zeros(sym_sizes, sym_acts));
  return det;
}

// ---------------------------------------------------------------------------
// Single-net baseline: one softmax over the whole signal set.
// ---------------------------------------------------------------------------

struct SingleDnnDetector {
  Mlp net;
  GsmConfig cfg;
  std::vector<GsmVector> signal_set;  // bit-lexicographic order = class index
  bool trained = false;
};

inline SingleDnnDetector build_single_dnn_detector(const GsmConfig& cfg,
                                                   std::uint64_t class_cap = 1u << 14) {
  if (cfg.signal_set_size() > class_cap)
    throw config_error("single-DNN baseline: |S| = " + std::to_string(cfg.signal_set_size()) +
                       " exceeds the one-hot class cap of " + std::to_string(class_cap));
  std::vector<int> sizes{2 * cfg.n_r, 32, 32, 64, 64, 32,
                         static_cast<int>(cfg.signal_set_size())};
  std::vector<Activation> acts(sizes.size() - 1, Activation::ReLU);
  acts.back() = Activation::Softmax;
  return {Mlp::zeros(sizes, acts), cfg, enumerate_signal_set(cfg), false};
}

inline void detect_bits(const SingleDnnDetector& det, const CVector& y, ModularScratch& s,
                        BitString& out) {
  if (!det.trained) throw config_error("SingleDnnDetector: detect called before training");
  featurize_into(y, s.feat);
  const RVector& p = forward_into(det.net, s.feat, s.net);
  out = det.signal_set[static_cast<std::size_t>(argmax(p))].bits;
}

inline DetectionResult detect(const SingleDnnDetector& det, const CVector& y) {
  ModularScratch s;
  BitString bits;
  detect_bits(det, y, s, bits);
  const RVector& p = forward_into(det.net, s.feat, s.net);
  const int k = argmax(p);
  return {det.signal_set[k], -std::log(detail::clamp_prob(p[k])), bits};
}

// ---------------------------------------------------------------------------
// Training.
// ---------------------------------------------------------------------------

struct DnnTrainMeta {
  int epochs = 20;
  int batch_size = 32;
  AdamHyper adam;
  // Symbol heads default to categorical cross entropy; this switches them to
  // per-class BCE on the softmax outputs for comparison runs.
  bool softmax_bce = false;
};

// Trains the n_rf+1 sub-nets; each net gets its own init/shuffle streams off
// seed_base, so concurrent and sequential training produce identical nets.
inline std::vector<std::vector<double>> train_modular(ModularDetector& det,
                                                      const TrainingSet& ts,
                                                      const DnnTrainMeta& meta,
                                                      std::uint64_t seed_base,
                                                      int threads = 1) {
  const int n_nets = 1 + static_cast<int>(det.symbol_nets.size());
  std::vector<std::vector<double>> histories(n_nets);
  auto train_one = [&](int net_idx) {
    Mlp& net = net_idx == 0 ? det.aap_net : det.symbol_nets[net_idx - 1];
    Rng init(seed_base, 0x5eed0000ULL + static_cast<std::uint64_t>(net_idx));
    net = Mlp::random(net.layer_sizes, net.activations, init);
    TrainConfig tc;
    tc.loss = net_idx == 0 ? Loss::BinaryCrossEntropy
                           : (meta.softmax_bce ? Loss::BinaryCrossEntropy
                                               : Loss::CategoricalCrossEntropy);
    tc.epochs = meta.epochs;
    tc.batch_size = meta.batch_size;
    tc.adam = meta.adam;
    tc.shuffle_seed = seed_base ^ (0x7a3c0000ULL + static_cast<std::uint64_t>(net_idx));
    const auto& targets = net_idx == 0 ? ts.aap_labels : ts.symbol_labels[net_idx - 1];
    histories[net_idx] = train(net, ts.inputs, targets, tc);
  };
  if (threads <= 1 || n_nets == 1) {
    for (int i = 0; i < n_nets; ++i) train_one(i);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int t = 0; t < std::min(threads, n_nets); ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < n_nets; i += std::min(threads, n_nets)) {
          try {
            train_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lk(err_mu);
            if (!err) err = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }
  det.trained = true;
  return histories;
}

inline std::vector<double> train_single(SingleDnnDetector& det, const TrainingSet& ts,
                                        const DnnTrainMeta& meta, std::uint64_t seed_base) {
  // one-hot class targets over the bit-lexicographic signal set
  std::vector<RVector> targets;
  targets.reserve(ts.inputs.size());
  const int classes = static_cast<int>(det.signal_set.size());
  const int rate = det.cfg.rate_bits();
  for (std::size_t e = 0; e < ts.inputs.size(); ++e) {
    // reconstruct the class index from the stored labels: AAP rank bits are
    // the high bits, symbol indices follow
    std::uint64_t cls = 0;
    const RVector& mask = ts.aap_labels[e];
    std::vector<int> active;
    for (int i = 0; i < det.cfg.n_t; ++i)
      if (mask[i] != 0.0) active.push_back(i);
    cls = aap_rank(make_aap(active, det.cfg.n_t));
    for (int s = 0; s < det.cfg.n_rf; ++s) {
      const RVector& onehot = ts.symbol_labels[s][e];
      cls = (cls << det.cfg.alphabet.bits_per_symbol) |
            static_cast<std::uint64_t>(argmax(onehot));
    }
    (void)rate;
    RVector t(classes, 0.0);
    t[cls] = 1.0;
    targets.push_back(std::move(t));
  }
  Rng init(seed_base, 0x5eedff00ULL);
  det.net = Mlp::random(det.net.layer_sizes, det.net.activations, init);
  TrainConfig tc;
  tc.loss = Loss::CategoricalCrossEntropy;
  tc.epochs = meta.epochs;
  tc.batch_size = meta.batch_size;
  tc.adam = meta.adam;
  tc.shuffle_seed = seed_base ^ 0x7a3cff00ULL;
  auto history = train(det.net, ts.inputs, targets, tc);
  det.trained = true;
  return history;
}

// ---------------------------------------------------------------------------
// Bundle serialization: a manifest plus one binary file per net. The static
// channel realization is stored as hexfloats so reloads are bit-exact.
// ---------------------------------------------------------------------------

struct DetectorBundle {
  std::string kind;  // "modular" or "single"
  ModularDetector modular{Mlp{}, {}, GsmConfig(4, 2, 4, ModAlphabet::bpsk()),
                          InputMode::RawY, {}, false};
  SingleDnnDetector single{Mlp{}, GsmConfig(4, 2, 4, ModAlphabet::bpsk()), {}, false};
  Channel channel;
  NoiseModel train_noise;
  std::string preset = "custom";
  int m_T = 0;
  double train_snr_db = 0;
  int epochs = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string hexfloats(const CMatrix& m) {
  std::string s;
  char buf[64];
  for (const cplx& e : m.data()) {
    std::snprintf(buf, sizeof buf, "%a %a ", e.real(), e.imag());
    s += buf;
  }
  if (!s.empty()) s.pop_back();
  return s;
}

inline CMatrix matrix_from_hexfloats(const std::string& s, int rows, int cols) {
  CMatrix m(rows, cols);
  const char* p = s.c_str();
  char* end = nullptr;
  for (cplx& e : m.data()) {
    const double re = std::strtod(p, &end);
    require(end != p, "bundle: malformed channel matrix");
    p = end;
    const double im = std::strtod(p, &end);
    require(end != p, "bundle: malformed channel matrix");
    p = end;
    e = {re, im};
  }
  return m;
}

}  // namespace detail

inline void save_bundle(const DetectorBundle& b, const std::string& stem) {
  KvFile kv;
  kv["bundle"]["kind"] = b.kind;
  kv["bundle"]["format_version"] = std::to_string(kNetFormatVersion);
  kv["bundle"]["preset"] = b.preset;
  const GsmConfig& cfg = b.kind == "single" ? b.single.cfg : b.modular.cfg;
  kv["gsm"]["n_t"] = std::to_string(cfg.n_t);
  kv["gsm"]["n_rf"] = std::to_string(cfg.n_rf);
  kv["gsm"]["n_r"] = std::to_string(cfg.n_r);
  kv["gsm"]["alphabet"] = to_string(cfg.alphabet.name);
  kv["bundle"]["input_mode"] =
      to_string(b.kind == "single" ? InputMode::RawY : b.modular.input_mode);
  kv["channel"]["mode"] = b.channel.mode == ChannelMode::Static ? "static" : "varying";
  if (b.channel.mode == ChannelMode::Static)
    kv["channel"]["h"] = detail::hexfloats(b.channel.h);
  kv["noise"]["kind"] = b.train_noise.kind == NoiseKind::IidGaussian ? "iid-gaussian"
                        : b.train_noise.kind == NoiseKind::Correlated ? "correlated"
                                                                      : "student-t";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", b.train_noise.rho_n);
  kv["noise"]["rho_n"] = buf;
  std::snprintf(buf, sizeof buf, "%.17g", b.train_noise.nu);
  kv["noise"]["nu"] = buf;
  kv["training"]["m_T"] = std::to_string(b.m_T);
  std::snprintf(buf, sizeof buf, "%.17g", b.train_snr_db);
  kv["training"]["snr_db"] = buf;
  kv["training"]["epochs"] = std::to_string(b.epochs);
  kv["training"]["seed"] = std::to_string(b.seed);
  if (b.kind == "single") {
    kv["nets"]["net"] = stem + ".net";
    save_mlp(b.single.net, stem + ".net");
  } else {
    kv["nets"]["aap"] = stem + ".aap.net";
    save_mlp(b.modular.aap_net, stem + ".aap.net");
    kv["nets"]["count"] = std::to_string(b.modular.symbol_nets.size());
    for (std::size_t i = 0; i < b.modular.symbol_nets.size(); ++i) {
      const std::string path = stem + ".sym" + std::to_string(i) + ".net";
      kv["nets"]["sym" + std::to_string(i)] = path;
      save_mlp(b.modular.symbol_nets[i], path);
    }
  }
  write_kv_file(kv, stem + ".manifest");
}

inline DetectorBundle load_bundle(const std::string& stem) {
  const KvFile kv = parse_kv_file(stem + ".manifest");
  DetectorBundle b;
  b.kind = kv_get(kv, "bundle", "kind");
  b.preset = kv_get_or(kv, "bundle", "preset", "custom");
  const GsmConfig cfg(std::stoi(kv_get(kv, "gsm", "n_t")), std::stoi(kv_get(kv, "gsm", "n_rf")),
                      std::stoi(kv_get(kv, "gsm", "n_r")),
                      alphabet_from_string(kv_get(kv, "gsm", "alphabet")));
  b.channel.mode =
      kv_get(kv, "channel", "mode") == "varying" ? ChannelMode::Varying : ChannelMode::Static;
  if (b.channel.mode == ChannelMode::Static)
    b.channel.h = detail::matrix_from_hexfloats(kv_get(kv, "channel", "h"), cfg.n_r, cfg.n_t);
  const std::string nk = kv_get(kv, "noise", "kind");
  const double rho = std::stod(kv_get_or(kv, "noise", "rho_n", "0"));
  const double nu = std::stod(kv_get_or(kv, "noise", "nu", "0"));
  if (nk == "correlated")
    b.train_noise = NoiseModel::correlated(rho, 1.0);
  else if (nk == "student-t")
    b.train_noise = NoiseModel::student_t(nu, 1.0);
  else
    b.train_noise = NoiseModel::iid_gaussian(1.0);
  b.m_T = std::stoi(kv_get(kv, "training", "m_T"));
  b.train_snr_db = std::stod(kv_get(kv, "training", "snr_db"));
  b.epochs = std::stoi(kv_get(kv, "training", "epochs"));
  b.seed = std::stoull(kv_get(kv, "training", "seed"));
  if (b.kind == "single") {
    b.single = SingleDnnDetector{load_mlp(kv_get(kv, "nets", "net")), cfg,
                                 enumerate_signal_set(cfg), true};
  } else {
    const InputMode mode = kv_get(kv, "bundle", "input_mode") == "mmse"
                               ? InputMode::MmsePreprocessed
                               : InputMode::RawY;
    b.modular = ModularDetector{load_mlp(kv_get(kv, "nets", "aap")),
                                {},
                                cfg,
                                mode,
                                valid_aaps(cfg.n_t, cfg.n_rf),
                                true};
    const int count = std::stoi(kv_get(kv, "nets", "count"));
    for (int i = 0; i < count; ++i)
      b.modular.symbol_nets.push_back(load_mlp(kv_get(kv, "nets", "sym" + std::to_string(i))));
  }
  return b;
}

}  // namespace gsmdet
