#include "terrain/config.hpp"
#include "terrain/harness.hpp"
#include "terrain/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON config file; defaults apply when omitted")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "overrides the config's seed everywhere");
  cmd->add_option("--out", args.out, "overrides the configured output directory");
}

terrain::AppConfig resolve(const CommonArgs& args) {
  terrain::AppConfig cfg = terrain::load_app_config(args.config);
  if (args.seed) cfg.train.seed = *args.seed;
  // one seed drives every stage so a single --seed pins the whole run
  cfg.synth.corpus.seed = cfg.train.seed;
  cfg.noise.sampler.seed = cfg.train.seed;
  if (!args.out.empty()) cfg.experiment.out_dir = args.out;
  return cfg;
}

void print_accuracy(const char* what, double accuracy) {
  std::printf("%s accuracy: %.2f%%\n", what, 100.0 * accuracy);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acoustic terrain classification toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string command;
  for (const char* name : {"synth-data", "preprocess", "features", "train", "finetune-noise",
                           "eval", "noise-eval", "sweep", "bench", "baseline"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, args);
    sub->callback([&command, name] { command = name; });
  }
  app.get_subcommand("synth-data")->description("generate the synthetic corpus and noise bank");
  app.get_subcommand("preprocess")->description("cache spectrograms and normalization stats");
  app.get_subcommand("features")->description("export classical feature bundles as CSV");
  app.get_subcommand("train")->description("train a model and evaluate it");
  app.get_subcommand("finetune-noise")->description("noise-aware fine-tuning of a checkpoint");
  app.get_subcommand("eval")->description("evaluate a checkpoint on a manifest split");
  app.get_subcommand("noise-eval")->description("accuracy grid across noise categories and SNRs");
  app.get_subcommand("sweep")->description("clip-length x LSTM-window training grid");
  app.get_subcommand("bench")->description("single-threaded end-to-end latency");
  app.get_subcommand("baseline")->description("classical feature + kNN/SVM baselines");

  CLI11_PARSE(app, argc, argv);

  try {
    const terrain::AppConfig cfg = resolve(args);
    namespace fs = std::filesystem;

    if (command == "synth-data") {
      const terrain::Manifest m = terrain::synthesize_corpus(cfg.experiment.out_dir, cfg.synth.corpus);
      std::printf("corpus: %zu recordings -> %s/manifest.csv\n", m.entries.size(),
                  cfg.experiment.out_dir.c_str());
      if (cfg.synth.with_noise_bank) {
        const std::string bank_dir = (fs::path(cfg.experiment.out_dir) / "noise").string();
        terrain::synthesize_noise_bank(bank_dir, cfg.sample_rate, cfg.synth.noise_seconds,
                                       cfg.synth.noise_recordings,
                                       cfg.train.seed ^ 0x6e6f6973ull);
        std::printf("noise bank: %s\n", bank_dir.c_str());
      }
    } else if (command == "preprocess") {
      terrain::run_preprocess(cfg);
      std::printf("spectrograms + norm stats -> %s\n", cfg.experiment.out_dir.c_str());
    } else if (command == "features") {
      terrain::run_features(cfg);
      std::printf("feature CSVs -> %s\n", cfg.experiment.out_dir.c_str());
    } else if (command == "train") {
      print_accuracy(cfg.experiment.eval_split.c_str(),
                     terrain::run_experiment(cfg, &std::cout).accuracy);
    } else if (command == "finetune-noise") {
      print_accuracy(cfg.experiment.eval_split.c_str(),
                     terrain::run_finetune(cfg, &std::cout).accuracy);
    } else if (command == "eval") {
      print_accuracy(cfg.experiment.eval_split.c_str(), terrain::run_eval(cfg).accuracy);
    } else if (command == "noise-eval") {
      const terrain::NoiseEvalReport r = terrain::run_noise_eval(cfg, &std::cout);
      std::printf("clean %.2f%%, corrupted grand mean %.2f%% -> %s/noise_eval.csv\n",
                  100.0 * r.clean_accuracy, 100.0 * r.grand_mean,
                  cfg.experiment.out_dir.c_str());
    } else if (command == "sweep") {
      terrain::run_sweep(cfg, &std::cout);
      std::printf("sweep reports -> %s\n", cfg.experiment.out_dir.c_str());
    } else if (command == "bench") {
      std::string ckpt_path = cfg.bench.checkpoint;
      if (ckpt_path.empty()) ckpt_path = cfg.experiment.checkpoint;
      if (ckpt_path.empty()) throw std::invalid_argument("bench: no checkpoint configured");
      const terrain::Checkpoint ckpt = terrain::load_checkpoint(ckpt_path);
      const terrain::LatencyReport r = terrain::bench_latency(
          ckpt, cfg.experiment.out_dir, cfg.bench.iterations, cfg.bench.warmup);
      terrain::write_latency_json((fs::path(cfg.experiment.out_dir) / "bench.json").string(), r);
      std::printf("median %.3f ms, p95 %.3f ms over %d iters on a %.0f ms clip (rtf %.3f)\n",
                  r.median_ms, r.p95_ms, r.iterations, r.clip_ms, r.realtime_factor);
    } else if (command == "baseline") {
      double best = 0.0;
      for (const terrain::BaselineRow& row : terrain::run_baselines(cfg, &std::cout))
        best = std::max(best, row.test.accuracy);
      print_accuracy("best baseline", best);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
