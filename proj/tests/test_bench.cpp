#include "doctest.h"

#include <cstring>
#include <filesystem>

#include "gsmdet/bench.hpp"

using namespace gsmdet;

namespace {

GsmConfig small_cfg() { return GsmConfig(4, 2, 4, ModAlphabet::bpsk()); }

// Baseline that guesses a signal vector from a hash of the received bytes:
// deterministic, input-dependent, and independent of the transmitted vector.
class RandomGuessRunner : public CurveRunner {
 public:
  explicit RandomGuessRunner(std::shared_ptr<const std::vector<GsmVector>> set)
      : set_(std::move(set)) {}
  std::unique_ptr<CurveRunner> clone() const override {
    return std::make_unique<RandomGuessRunner>(set_);
  }
  void detect_bits(const CVector& y, const CMatrix&, BitString& out) override {
    std::uint64_t h = 1469598103934665603ULL;
    for (const cplx& e : y) {
      std::uint64_t bits[2];
      std::memcpy(bits, &e, sizeof bits);
      for (std::uint64_t b : bits) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
    out = (*set_)[h % set_->size()].bits;
  }

 private:
  std::shared_ptr<const std::vector<GsmVector>> set_;
};

ExperimentConfig tiny_experiment(std::uint64_t seed) {
  ExperimentConfig e(small_cfg());
  e.name = "tiny";
  e.curves = {{"ml", DetectorKind::Ml, NoiseModel::iid_gaussian(1.0)},
              {"mmse", DetectorKind::Mmse, NoiseModel::iid_gaussian(1.0)}};
  e.snr_grid_db = {4.0, 8.0};
  e.stop = {30, 20000};
  e.master_seed = seed;
  e.threads = 2;
  return e;
}

}  // namespace

TEST_SUITE("bench-cli") {

TEST_CASE("wilson interval brackets the point estimate") {
  const WilsonInterval ci = wilson_interval(40, 1000);
  CHECK(ci.lo < 0.04);
  CHECK(ci.hi > 0.04);
  CHECK(ci.lo > 0.0);
  CHECK(ci.hi < 1.0);

  const WilsonInterval zero = wilson_interval(0, 1000);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi > 0.0);  // still informative as an upper bound
}

TEST_CASE("noiseless ML yields a zero-error row flagged as an upper bound") {
  const GsmConfig cfg = small_cfg();
  const auto set = enumerate_signal_set(cfg);
  Rng rng(400, 0);
  const CMatrix h = draw_channel(4, 4, rng);
  MlRunner runner(std::make_shared<const MlDetector>(h, set));
  const BerRow row = run_ber_point(cfg, ChannelMode::Static, &h,
                                   NoiseModel::iid_gaussian(1e-20), 200.0, runner,
                                   {50, 10000}, 1, 2);
  CHECK(row.errors == 0);
  CHECK(row.ber == 0.0);
  CHECK(row.hit_max);
  CHECK(row.bits >= 10000 * cfg.rate_bits());
}

TEST_CASE("a random-guess detector sits at BER 1/2") {
  const GsmConfig cfg = small_cfg();
  const auto set = std::make_shared<const std::vector<GsmVector>>(enumerate_signal_set(cfg));
  Rng rng(401, 0);
  const CMatrix h = draw_channel(4, 4, rng);
  RandomGuessRunner runner(set);
  // 25000 uses = 1e5 bits; min_errors forces the full budget
  const BerRow row = run_ber_point(cfg, ChannelMode::Static, &h,
                                   NoiseModel::iid_gaussian(0.5), 10.0, runner,
                                   {1000000, 25000}, 2, 2);
  CHECK(row.bits >= 100000);
  CHECK(row.ber == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("rows are identical for any worker count") {
  const GsmConfig cfg = small_cfg();
  const auto set = enumerate_signal_set(cfg);
  Rng rng(402, 0);
  const CMatrix h = draw_channel(4, 4, rng);
  const NoiseModel noise = NoiseModel::iid_gaussian(0.1);
  MlRunner r1(std::make_shared<const MlDetector>(h, set));
  MlRunner r2(std::make_shared<const MlDetector>(h, set));
  const BerRow a = run_ber_point(cfg, ChannelMode::Static, &h, noise, 6.0, r1, {100, 50000}, 3, 1);
  const BerRow b = run_ber_point(cfg, ChannelMode::Static, &h, noise, 6.0, r2, {100, 50000}, 3, 4);
  CHECK(a.bits == b.bits);
  CHECK(a.errors == b.errors);
  CHECK(a.ber == b.ber);
}

TEST_CASE("experiment reruns emit byte-identical CSV bodies across thread counts") {
  ExperimentConfig e1 = tiny_experiment(11);
  e1.threads = 1;
  ExperimentConfig e2 = tiny_experiment(11);
  e2.threads = 4;
  const std::string csv1 = csv_string(run_experiment(e1), e1);
  const std::string csv2 = csv_string(run_experiment(e2), e2);
  CHECK(csv1 == csv2);
  CHECK(csv1.find(kCsvSchema) != std::string::npos);
  CHECK(csv1.find("ml,4,") != std::string::npos);
}

TEST_CASE("changing the master seed changes error counts but not the coarse ordering") {
  const auto curves1 = run_experiment(tiny_experiment(11));
  const auto curves2 = run_experiment(tiny_experiment(12));
  bool any_different = false;
  for (std::size_t c = 0; c < curves1.size(); ++c)
    for (std::size_t p = 0; p < curves1[c].rows.size(); ++p)
      any_different |= curves1[c].rows[p].errors != curves2[c].rows[p].errors;
  CHECK(any_different);
  // mmse is never better than ml at the top of the grid, under either seed
  for (const auto* curves : {&curves1, &curves2}) {
    const BerRow& ml = (*curves)[0].rows.back();
    const BerRow& mmse = (*curves)[1].rows.back();
    CHECK(mmse.ber >= ml.ber);
  }
}

TEST_CASE("stopping rule soundness: enough errors or the cap flag") {
  for (const BerCurve& curve : run_experiment(tiny_experiment(13))) {
    for (const BerRow& row : curve.rows) {
      const bool enough = row.errors >= 30;
      CHECK((enough || row.hit_max));
      CHECK(row.bits % small_cfg().rate_bits() == 0);
      CHECK(row.ci_lo <= row.ber);
      CHECK(row.ci_hi >= row.ber);
    }
  }
}

TEST_CASE("experiment validation") {
  ExperimentConfig e = tiny_experiment(1);
  e.snr_grid_db = {4.0, 4.0};
  CHECK_THROWS_AS(run_experiment(e), config_error);
  e.snr_grid_db.clear();
  CHECK_THROWS_AS(run_experiment(e), config_error);
  e = tiny_experiment(1);
  e.curves.clear();
  CHECK_THROWS_AS(run_experiment(e), config_error);
  e = tiny_experiment(1);
  e.stop.min_errors = 0;
  CHECK_THROWS_AS(run_experiment(e), config_error);
}

TEST_CASE("config files parse into experiments") {
  std::istringstream ini(
      "# comment\n"
      "[experiment]\n"
      "name = demo\n"
      "[gsm]\n"
      "n_t = 4\n"
      "n_rf = 2\n"
      "n_r = 4\n"
      "alphabet = bpsk\n"
      "[channel]\n"
      "mode = static\n"
      "[noise]\n"
      "kind = correlated\n"
      "rho_n = 0.4\n"
      "[detectors]\n"
      "list = ml, modified-ml\n"
      "[sweep]\n"
      "snr_db = 0, 4, 8\n"
      "min_errors = 50\n"
      "max_uses = 10000\n"
      "seed = 9\n");
  const ExperimentConfig e = experiment_from_kv(parse_kv(ini));
  CHECK(e.name == "demo");
  CHECK(e.gsm.n_t == 4);
  CHECK(e.curves.size() == 2);
  CHECK(e.curves[1].kind == DetectorKind::ModifiedMl);
  CHECK(e.curves[0].noise.kind == NoiseKind::Correlated);
  CHECK(e.snr_grid_db == std::vector<double>{0, 4, 8});
  CHECK(e.stop.min_errors == 50);
  CHECK(e.master_seed == 9);

  std::istringstream bad(
      "[gsm]\nn_t = 4\nn_rf = 2\nn_r = 4\n[detectors]\nlist = dnn\n");
  CHECK_THROWS_AS(experiment_from_kv(parse_kv(bad)), config_error);
}

TEST_CASE("the run engine matches a hand-rolled reference simulation") {
  // Reference: sequential loop with the same per-block streams.
  const GsmConfig cfg = small_cfg();
  const auto set = enumerate_signal_set(cfg);
  Rng rng(403, 0);
  const CMatrix h = draw_channel(4, 4, rng);
  const NoiseModel noise = NoiseModel::iid_gaussian(0.3);
  MlRunner runner(std::make_shared<const MlDetector>(h, set));
  const StoppingRule stop{25, 8192};
  const BerRow row = run_ber_point(cfg, ChannelMode::Static, &h, noise, 5.0, runner, stop, 17, 2);

  const MlDetector ml(h, set);
  long long errors = 0, uses = 0;
  CVector scratch, y, nvec;
  bool done = false;
  for (std::uint64_t block = 0; !done; ++block) {
    Rng brg(17, (std::uint64_t{4} << 56) | block);  // sweep tag, group 0, point 0
    NoiseSampler sampler(noise, 4);
    for (int u = 0; u < 2048; ++u) {
      const GsmVector& x = set[brg.bits(cfg.rate_bits())];
      cmatvec_into(h, x.symbols, y);
      sampler.sample_into(brg, nvec);
      for (int i = 0; i < 4; ++i) y[i] += nvec[i];
      const BitString& hat = set[ml.detect_index(y, scratch)].bits;
      for (int b = 0; b < cfg.rate_bits(); ++b) errors += hat[b] != x.bits[b];
    }
    uses += 2048;
    done = errors >= stop.min_errors || uses >= stop.max_uses;
  }
  CHECK(row.errors == errors);
  CHECK(row.bits == uses * cfg.rate_bits());
}

TEST_CASE("preset registry and complexity report") {
  CHECK(experiment_preset_ids().size() == 6);
  for (const std::string& id : experiment_preset_ids())
    CHECK(!experiment_preset_description(id).empty());

  const ExperimentConfig fig2 = make_preset_experiment("fig2");
  REQUIRE(fig2.curves.size() == 4);
  CHECK(fig2.curves[0].label == "ml");
  CHECK(fig2.curves[3].kind == DetectorKind::SingleDnn);
  CHECK(fig2.snr_grid_db.front() == 0.0);
  CHECK(fig2.snr_grid_db.back() == 12.0);

  const ExperimentConfig fig4 = make_preset_experiment("fig4");
  REQUIRE(fig4.curves.size() == 4);
  CHECK(fig4.curves[1].kind == DetectorKind::ModifiedMl);
  CHECK(fig4.curves[1].noise.rho_n == 0.4);
  CHECK(fig4.curves[3].noise.kind == NoiseKind::IidGaussian);

  const ExperimentConfig fig5 = make_preset_experiment("fig5");
  CHECK(fig5.curves.size() == 6);

  CHECK_THROWS_AS(make_preset_experiment("nope"), config_error);

  const auto rows = complexity_report({"fig3a", "fig3b"});
  REQUIRE(rows.size() == 6);
  // exhaustive-search cost sits at the reference order of magnitude (~3e5)
  CHECK(rows[0].detector == "ml");
  CHECK(rows[0].ops.total() > 100000);
  CHECK(rows[0].ops.total() < 1000000);
  // dnn cost scales with the learned parameter count
  const DnnPreset& p3a = dnn_preset("fig3a");
  std::int64_t weights = 0;
  for (std::size_t l = 0; l + 1 < p3a.aap_layers.size(); ++l)
    weights += static_cast<std::int64_t>(p3a.aap_layers[l]) * p3a.aap_layers[l + 1];
  for (int s = 0; s < p3a.n_rf; ++s)
    for (std::size_t l = 0; l + 1 < p3a.sym_layers.size(); ++l)
      weights += static_cast<std::int64_t>(p3a.sym_layers[l]) * p3a.sym_layers[l + 1];
  CHECK(rows[2].detector == "dnn");
  CHECK(rows[2].ops.real_multiplies == weights);

  // the report is pure
  const auto again = complexity_report({"fig3a", "fig3b"});
  for (std::size_t i = 0; i < rows.size(); ++i)
    CHECK(rows[i].ops.total() == again[i].ops.total());
}

}  // TEST_SUITE
