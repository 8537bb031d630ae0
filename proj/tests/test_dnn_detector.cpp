#include "doctest.h"

#include <filesystem>

#include "gsmdet/dnn_detector.hpp"

using namespace gsmdet;

namespace {

GsmConfig small_cfg() { return GsmConfig(4, 2, 4, ModAlphabet::bpsk()); }

// Detector with randomly initialized (but formally "trained") nets, for
// closure fuzzing without a training run.
ModularDetector random_detector(std::uint64_t seed) {
  ModularDetector det = build_preset_detector("fig2");
  Rng rng(seed, 0);
  det.aap_net = Mlp::random(det.aap_net.layer_sizes, det.aap_net.activations, rng);
  for (Mlp& net : det.symbol_nets)
    net = Mlp::random(net.layer_sizes, net.activations, rng);
  det.trained = true;
  return det;
}

}  // namespace

TEST_SUITE("dnn-detector") {

TEST_CASE("featurize stacks real over imaginary parts") {
  const RVector f = featurize({{1, 2}, {3, -1}});
  CHECK(f == RVector{1, 3, 2, -1});

  const RVector fr = featurize({{0.5, 0}, {-2, 0}});
  CHECK(fr[2] == 0.0);
  CHECK(fr[3] == 0.0);

  const CVector y = {{0.3, -0.7}, {1.5, 2.5}, {0, 1}};
  CHECK(defeaturize(featurize(y)) == y);
}

TEST_CASE("valid top-k patterns pass through the selector unchanged") {
  const auto patterns = valid_aaps(4, 2);
  CHECK(select_aap({0.9, 0.8, 0.1, 0.2}, patterns, 2).active == std::vector<int>{0, 1});
  // uniform probabilities: deterministic lowest-index pattern
  CHECK(select_aap({0.5, 0.5, 0.5, 0.5}, patterns, 2).active == std::vector<int>{0, 1});
}

TEST_CASE("invalid top-k falls back to the Bernoulli-likelihood repair") {
  const auto patterns = valid_aaps(4, 2);
  // top-2 is {1,3}, which is invalid; {1,2} wins the likelihood score
  CHECK(select_aap({0.1, 0.9, 0.2, 0.8}, patterns, 2).active == std::vector<int>{1, 2});
}

TEST_CASE("selector fallback never fires when the top pattern is valid") {
  const auto patterns = valid_aaps(6, 3);
  Rng rng(300, 0);
  for (int t = 0; t < 2000; ++t) {
    RVector p(6);
    for (double& v : p) v = rng.uniform();
    const Aap chosen = select_aap(p, patterns, 3);
    std::vector<int> idx(6);
    for (int i = 0; i < 6; ++i) idx[i] = i;
    std::partial_sort(idx.begin(), idx.begin() + 3, idx.end(),
                      [&](int a, int b) { return p[a] > p[b] || (p[a] == p[b] && a < b); });
    std::vector<int> top(idx.begin(), idx.begin() + 3);
    std::sort(top.begin(), top.end());
    bool top_valid = false;
    for (const Aap& v : patterns) top_valid |= v.active == top;
    if (top_valid) CHECK(chosen.active == top);
  }
}

TEST_CASE("raising an active antenna's probability never evicts it") {
  const auto patterns = valid_aaps(5, 2);
  Rng rng(301, 0);
  for (int t = 0; t < 2000; ++t) {
    RVector p(5);
    for (double& v : p) v = rng.uniform();
    const Aap before = select_aap(p, patterns, 2);
    const int i = before.active[rng.below(2)];
    RVector p2 = p;
    p2[i] = p[i] + (1.0 - p[i]) * rng.uniform();
    const Aap after = select_aap(p2, patterns, 2);
    const bool still_active =
        std::find(after.active.begin(), after.active.end(), i) != after.active.end();
    CHECK(still_active);
  }
}

TEST_CASE("training sets have the documented shapes and labels") {
  const GsmConfig cfg = small_cfg();
  Rng rng(302, 0);
  Channel chan{ChannelMode::Static, draw_channel(4, 4, rng)};
  const TrainingSet ts = make_training_set(chan, cfg, 500, 10.0,
                                           NoiseModel::iid_gaussian(1.0), InputMode::RawY, rng);
  REQUIRE(ts.inputs.size() == 500);
  REQUIRE(ts.aap_labels.size() == 500);
  REQUIRE(ts.symbol_labels.size() == 2);
  REQUIRE(ts.symbol_labels[0].size() == 500);
  for (const RVector& in : ts.inputs) CHECK(in.size() == 8);
  for (const RVector& mask : ts.aap_labels) {
    double pop = 0;
    for (double v : mask) pop += v;
    CHECK(pop == 2.0);
  }
  for (int s = 0; s < 2; ++s)
    for (const RVector& onehot : ts.symbol_labels[s]) {
      double sum = 0;
      for (double v : onehot) sum += v;
      CHECK(sum == 1.0);
    }
}

TEST_CASE("noiseless identity-channel inputs equal the featurized signal vector") {
  const GsmConfig cfg = small_cfg();
  Rng rng(303, 0);
  Channel chan{ChannelMode::Static, CMatrix::identity(4)};
  // sigma2 ~ P / (n_r * snr): a 200 dB SNR pins the noise at ~1e-20
  const TrainingSet ts = make_training_set(chan, cfg, 64, 200.0,
                                           NoiseModel::iid_gaussian(1.0), InputMode::RawY, rng);
  for (std::size_t e = 0; e < ts.inputs.size(); ++e) {
    std::vector<int> active;
    for (int i = 0; i < 4; ++i)
      if (ts.aap_labels[e][i] != 0.0) active.push_back(i);
    const CVector y = defeaturize(ts.inputs[e]);
    for (int i = 0; i < 4; ++i) {
      const bool is_active =
          std::find(active.begin(), active.end(), i) != active.end();
      if (is_active)
        CHECK(std::abs(std::abs(y[i].real()) - 1.0) < 1e-9);
      else
        CHECK(std::abs(y[i]) < 1e-9);
    }
  }
}

TEST_CASE("detection closure: outputs always live in the signal set") {
  const ModularDetector det = random_detector(42);
  const GsmConfig& cfg = det.cfg;
  Rng rng(304, 0);
  ModularScratch s;
  BitString bits;
  for (int t = 0; t < 10000; ++t) {
    CVector y = sample_standard_complex_gaussian(rng, 4);
    detect_bits(det, y, nullptr, 0, s, bits);
    CHECK_NOTHROW(bits_to_gsm_vector(bits, cfg));  // valid <=> mappable
  }
  // adversarially flat probabilities via a zeroed net
  ModularDetector flat = build_preset_detector("fig2");
  flat.trained = true;
  CVector y = sample_standard_complex_gaussian(rng, 4);
  detect_bits(flat, y, nullptr, 0, s, bits);
  CHECK_NOTHROW(bits_to_gsm_vector(bits, cfg));
}

TEST_CASE("detection is deterministic and reports untrained nets") {
  const ModularDetector det = random_detector(43);
  Rng rng(305, 0);
  const CVector y = sample_standard_complex_gaussian(rng, 4);
  const DetectionResult a = detect(det, y);
  const DetectionResult b = detect(det, y);
  CHECK(a.bits_hat == b.bits_hat);
  CHECK(a.metric == b.metric);

  const ModularDetector raw = build_preset_detector("fig2");
  CHECK_THROWS_AS(detect(raw, y), config_error);
}

TEST_CASE("preset layer listings") {
  const ModularDetector fig2 = build_preset_detector("fig2");
  CHECK(fig2.aap_net.layer_sizes == std::vector<int>{8, 16, 16, 8, 4});
  REQUIRE(fig2.symbol_nets.size() == 2);
  CHECK(fig2.symbol_nets[0].layer_sizes == std::vector<int>{8, 16, 16, 8, 2});
  CHECK(fig2.aap_net.activations.back() == Activation::Sigmoid);
  CHECK(fig2.symbol_nets[0].activations.back() == Activation::Softmax);

  std::int64_t weights = parameter_count(fig2.aap_net, CountConvention::WeightsOnly);
  for (const Mlp& net : fig2.symbol_nets)
    weights += parameter_count(net, CountConvention::WeightsOnly);
  CHECK(weights == 1600);

  const ModularDetector fig3b = build_preset_detector("fig3b");
  CHECK(fig3b.aap_net.layer_sizes == std::vector<int>{32, 320, 160, 80, 40, 20, 16});
  CHECK(fig3b.aap_net.activations.back() == Activation::Sigmoid);

  const ModularDetector fig6 = build_preset_detector("fig6");
  CHECK(fig6.input_mode == InputMode::MmsePreprocessed);
  CHECK(fig6.aap_net.layer_sizes == std::vector<int>{8, 320, 256, 128, 64, 32, 4});

  CHECK_THROWS_AS(build_preset_detector("fig7"), config_error);
}

TEST_CASE("mmse preprocessing limits") {
  Rng rng(306, 0);
  // scalar identity case: H = I, snr = 1 -> z = y/2
  const CVector y = sample_standard_complex_gaussian(rng, 3);
  const CVector z = mmse_preprocess(y, CMatrix::identity(3), 1.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(z[i] - y[i] * 0.5) < 1e-12);

  // zero-forcing limit on a well-conditioned square channel
  CMatrix h = CMatrix::identity(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) h(i, j) += 0.1 * rng.cnormal();
  const GsmConfig cfg = small_cfg();
  const auto set = enumerate_signal_set(cfg);
  for (const GsmVector& x : set) {
    const CVector zx = mmse_preprocess(cmatvec(h, x.symbols), h, 1e12);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(zx[i] - x.symbols[i]) < 1e-6);
  }
}

TEST_CASE("classical MMSE detection agrees with the shared preprocessing estimate") {
  Rng rng(307, 0);
  const GsmConfig cfg = small_cfg();
  const CMatrix h = draw_channel(4, 4, rng);
  const auto patterns = valid_aaps(4, 2);
  const MmseDetector det(h, 10.0, cfg);
  for (int t = 0; t < 50; ++t) {
    const CVector y = sample_standard_complex_gaussian(rng, 4);
    const CVector z = mmse_preprocess(y, h, 10.0);
    const DetectionResult r = det.detect(y);
    // the detector's pattern is the energy argmax of the shared estimate
    CHECK(r.x_hat.aap.active == patterns[select_aap_by_energy(z, patterns)].active);
  }
}

TEST_CASE("single-net baseline: width, closure, one-hot round trip") {
  const GsmConfig cfg = small_cfg();
  SingleDnnDetector det = build_single_dnn_detector(cfg);
  CHECK(det.net.layer_sizes == std::vector<int>{8, 32, 32, 64, 64, 32, 16});
  CHECK(det.net.output_size() == 16);

  Rng rng(308, 0);
  det.net = Mlp::random(det.net.layer_sizes, det.net.activations, rng);
  det.trained = true;
  ModularScratch s;
  BitString bits;
  for (int t = 0; t < 2000; ++t) {
    detect_bits(det, sample_standard_complex_gaussian(rng, 4), s, bits);
    CHECK_NOTHROW(bits_to_gsm_vector(bits, cfg));
  }
  for (std::size_t k = 0; k < det.signal_set.size(); ++k)
    CHECK(bits_to_uint(det.signal_set[k].bits, 0, cfg.rate_bits()) == k);

  const GsmConfig big(16, 4, 4, ModAlphabet::qam4());  // 2^18 classes
  CHECK_THROWS_AS(build_single_dnn_detector(big), config_error);
}

TEST_CASE("a noiseless identity channel is learned to 100% training accuracy") {
  const GsmConfig cfg = small_cfg();
  Rng rng(309, 0);
  Channel chan{ChannelMode::Static, CMatrix::identity(4)};
  const TrainingSet ts = make_training_set(chan, cfg, 2000, 200.0,
                                           NoiseModel::iid_gaussian(1.0), InputMode::RawY, rng);
  ModularDetector det = build_preset_detector("fig2");
  DnnTrainMeta meta;
  meta.epochs = 20;
  const auto histories = train_modular(det, ts, meta, 1234, 2);
  for (const auto& h : histories) CHECK(h.back() <= h.front());

  ModularScratch s;
  BitString bits;
  int correct = 0;
  for (std::size_t e = 0; e < ts.inputs.size(); ++e) {
    detect_bits(det, defeaturize(ts.inputs[e]), nullptr, 0, s, bits);
    GsmVector x = bits_to_gsm_vector(bits, cfg);
    bool match = true;
    for (int i = 0; i < 4; ++i) match &= (x.aap.mask[i] != 0) == (ts.aap_labels[e][i] != 0);
    const CVector y = defeaturize(ts.inputs[e]);
    for (int i : x.aap.active) match &= std::abs(y[i] - x.symbols[i]) < 0.5;
    correct += match;
  }
  CHECK(correct == static_cast<int>(ts.inputs.size()));
}

TEST_CASE("concurrent and sequential training produce identical nets") {
  const GsmConfig cfg = small_cfg();
  Rng rng(310, 0);
  Channel chan{ChannelMode::Static, draw_channel(4, 4, rng)};
  const TrainingSet ts = make_training_set(chan, cfg, 300, 10.0,
                                           NoiseModel::iid_gaussian(1.0), InputMode::RawY, rng);
  DnnTrainMeta meta;
  meta.epochs = 3;
  ModularDetector seq = build_preset_detector("fig2");
  ModularDetector par = build_preset_detector("fig2");
  train_modular(seq, ts, meta, 99, 1);
  train_modular(par, ts, meta, 99, 3);
  CHECK(seq.aap_net.weights[0].a == par.aap_net.weights[0].a);
  for (std::size_t i = 0; i < seq.symbol_nets.size(); ++i)
    CHECK(seq.symbol_nets[i].weights.back().a == par.symbol_nets[i].weights.back().a);
}

TEST_CASE("bundle save/load round trip preserves detection behavior") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "gsmdet_bundle_test").string();
  fs::create_directories(dir);
  const std::string stem = dir + "/fig2";

  DetectorBundle b;
  b.kind = "modular";
  b.modular = random_detector(77);
  Rng rng(311, 0);
  b.channel = {ChannelMode::Static, draw_channel(4, 4, rng)};
  b.train_noise = NoiseModel::correlated(0.4, 1.0);
  b.preset = "fig2";
  b.m_T = 10000;
  b.train_snr_db = 10.0;
  b.epochs = 20;
  b.seed = 7;
  save_bundle(b, stem);

  const DetectorBundle back = load_bundle(stem);
  CHECK(back.kind == "modular");
  CHECK(back.preset == "fig2");
  CHECK(back.m_T == 10000);
  CHECK(back.train_noise.kind == NoiseKind::Correlated);
  CHECK(back.train_noise.rho_n == 0.4);
  CHECK(back.channel.h.data() == b.channel.h.data());  // hexfloat round trip
  for (int l = 0; l < b.modular.aap_net.layer_count(); ++l)
    CHECK(back.modular.aap_net.weights[l].a == b.modular.aap_net.weights[l].a);

  for (int t = 0; t < 100; ++t) {
    const CVector y = sample_standard_complex_gaussian(rng, 4);
    CHECK(detect(back.modular, y).bits_hat == detect(b.modular, y).bits_hat);
  }
  fs::remove_all(dir);
}

}  // TEST_SUITE
