// gsmdet command line: BER sweeps over bundled presets or config files,
// detector training, bundle-based detection checks, and the complexity report.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsmdet/gsmdet.hpp"

using namespace gsmdet;

namespace {

int run_sweep(const std::string& preset, const std::string& config_path,
              const std::string& out, std::uint64_t seed, int threads,
              const std::string& cache_dir) {
  ExperimentConfig exp = [&] {
    if (!preset.empty()) return make_preset_experiment(preset, seed);
    if (config_path.empty())
      throw config_error("sweep needs --preset or --config");
    ExperimentConfig e = experiment_from_kv(parse_kv_file(config_path));
    e.master_seed = seed ? seed : e.master_seed;
    return e;
  }();
  if (threads > 0) exp.threads = threads;
  if (!cache_dir.empty()) exp.cache_dir = cache_dir;

  const std::vector<BerCurve> curves = run_experiment(exp);
  if (out.empty() || out == "-") {
    write_csv(curves, exp, std::cout);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw config_error("cannot write " + out);
    write_csv(curves, exp, os);
    std::fprintf(stderr, "wrote %s\n", out.c_str());
  }
  return 0;
}

int run_train(const std::string& preset, std::uint64_t seed, const std::string& out,
              int threads) {
  ExperimentConfig exp = make_preset_experiment(preset, seed);
  if (!out.empty()) exp.cache_dir = out;
  if (threads > 0) exp.threads = threads;

  Channel chan;
  chan.mode = exp.channel_mode;
  Rng chan_rng(exp.master_seed, (std::uint64_t{1} << 56));
  if (exp.channel_mode == ChannelMode::Static)
    chan.h = draw_channel(exp.gsm.n_r, exp.gsm.n_t, chan_rng);

  bool any = false;
  for (std::size_t c = 0; c < exp.curves.size(); ++c) {
    const CurveSpec& spec = exp.curves[c];
    if (spec.kind != DetectorKind::ModularDnn && spec.kind != DetectorKind::SingleDnn)
      continue;
    any = true;
    std::fprintf(stderr, "training %s/%s ...\n", preset.c_str(), spec.label.c_str());
    train_curve_detector(exp, spec, c, chan, exp.threads > 0 ? exp.threads : 2);
  }
  if (!any) throw config_error("preset " + preset + " has no trainable detectors");
  std::fprintf(stderr, "bundles under %s\n", exp.cache_dir.c_str());
  return 0;
}

int run_detect(const std::string& bundle_stem, double snr_db, long long uses,
               std::uint64_t seed, int threads) {
  const DetectorBundle b = load_bundle(bundle_stem);
  const GsmConfig& cfg = b.kind == "single" ? b.single.cfg : b.modular.cfg;
  const double snr_linear = SnrPoint::from_db(snr_db).snr_linear;
  const double power = b.channel.mode == ChannelMode::Static
                           ? mean_signal_power(b.channel.h, enumerate_signal_set(cfg))
                           : mean_signal_power_varying(cfg);
  const NoiseModel noise =
      b.train_noise.with_sigma2(noise_variance_for_snr(power, cfg.n_r, snr_linear));

  std::unique_ptr<CurveRunner> runner;
  if (b.kind == "single") {
    runner = std::make_unique<SingleDnnRunner>(
        std::make_shared<const SingleDnnDetector>(b.single));
  } else {
    runner = std::make_unique<ModularDnnRunner>(
        std::make_shared<const ModularDetector>(b.modular), snr_linear);
  }
  const BerRow row =
      run_ber_point(cfg, b.channel.mode,
                    b.channel.mode == ChannelMode::Static ? &b.channel.h : nullptr, noise,
                    snr_db, *runner, {1LL << 62, uses}, seed, threads > 0 ? threads : 2);
  std::printf("bundle %s @ %.2f dB: bits=%lld errors=%lld ber=%.6g ci=[%.6g, %.6g]\n",
              bundle_stem.c_str(), snr_db, row.bits, row.errors, row.ber, row.ci_lo,
              row.ci_hi);
  return 0;
}

int run_complexity(std::vector<std::string> ids) {
  if (ids.empty()) ids = {"fig2", "fig3a", "fig3b", "fig6"};
  std::printf("# convention: %s\n", kOpCountConvention);
  std::printf("%-8s %-12s %14s %14s %12s %14s\n", "preset", "detector", "multiplies",
              "additions", "comparisons", "total");
  for (const ComplexityRow& r : complexity_report(ids)) {
    std::printf("%-8s %-12s %14lld %14lld %12lld %14lld\n", r.preset.c_str(),
                r.detector.c_str(), static_cast<long long>(r.ops.real_multiplies),
                static_cast<long long>(r.ops.real_additions),
                static_cast<long long>(r.ops.comparisons),
                static_cast<long long>(r.ops.total()));
  }
  return 0;
}

int run_presets_list() {
  for (const std::string& id : experiment_preset_ids())
    std::printf("%-8s %s\n", id.c_str(), experiment_preset_description(id).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gsmdet: generalized spatial modulation detection simulator"};
  app.set_version_flag("--version",
                       std::string("gsmdet ") + kVersion + "\nnet format v" +
                           std::to_string(kNetFormatVersion) + "\ncsv schema: " + kCsvSchema +
                           "\nop convention: " + kOpCountConvention);

  std::uint64_t seed = 1;
  int threads = 0;
  std::string out, config_path, cache_dir;
  app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (0 = hardware)");
  app.add_option("--out", out, "output path ('-' for stdout)");
  app.add_option("--config", config_path, "experiment config file");

  auto* sweep = app.add_subcommand("sweep", "run a BER sweep and write CSV");
  std::string sweep_preset;
  sweep->add_option("--preset", sweep_preset, "bundled experiment preset");
  sweep->add_option("--cache", cache_dir, "detector bundle cache directory");

  auto* train = app.add_subcommand("train", "train a preset's neural detectors");
  std::string train_preset;
  train->add_option("--preset", train_preset, "bundled experiment preset")->required();

  auto* detect = app.add_subcommand("detect", "run a trained bundle at one SNR point");
  std::string bundle;
  double snr_db = 10.0;
  long long uses = 100000;
  detect->add_option("--bundle", bundle, "bundle stem (path without .manifest)")->required();
  detect->add_option("--snr", snr_db, "operating SNR in dB")->capture_default_str();
  detect->add_option("--uses", uses, "channel uses to simulate")->capture_default_str();

  auto* complexity = app.add_subcommand("complexity", "print the real-operation report");
  std::vector<std::string> complexity_ids;
  complexity->add_option("presets", complexity_ids, "preset ids (default: all)");

  auto* presets = app.add_subcommand("presets", "preset utilities");
  auto* presets_list = presets->add_subcommand("list", "list bundled presets");

  app.require_subcommand(0, 1);
  for (CLI::App* sub : {sweep, train, detect, complexity, presets}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) return run_sweep(sweep_preset, config_path, out, seed, threads, cache_dir);
    if (train->parsed()) return run_train(train_preset, seed, out, threads);
    if (detect->parsed()) return run_detect(bundle, snr_db, uses, seed, threads);
    if (complexity->parsed()) return run_complexity(complexity_ids);
    if (presets->parsed()) {
      if (presets_list->parsed()) return run_presets_list();
      throw config_error("usage: gsmdet presets list");
    }
    std::cout << app.help();
    return 0;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
