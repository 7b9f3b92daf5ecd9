#include "terrain/harness.hpp"

#include "terrain/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

namespace terrain {

namespace fs = std::filesystem;

namespace {

NetworkSpec build_net_spec(const AppConfig& cfg, int num_classes) {
  NetworkSpec net;
  net.variant = cfg.net.variant;
  net.input_bins = cfg.stft.kept_bins;
  net.input_frames = static_cast<int>(
      cfg.stft.num_frames(duration_samples(cfg.sample_rate, cfg.clip.clip_ms)));
  net.conv_channels = cfg.net.conv_channels;
  net.fc_widths = cfg.net.fc_widths;
  net.lstm_hidden = cfg.net.lstm_hidden;
  net.dropout = cfg.net.dropout;
  net.num_classes = num_classes;
  net.lstm_window = net.has_lstm() ? cfg.net.lstm_window : 1;
  return net;
}

Manifest load_experiment_manifest(const AppConfig& cfg) {
  if (cfg.experiment.manifest.empty())
    throw std::invalid_argument("experiment.manifest is not set");
  return load_manifest(cfg.experiment.manifest);
}

void write_reports(const std::string& out_dir, const Metrics& m) {
  write_metrics_json((fs::path(out_dir) / "metrics.json").string(), m);
  write_confusion_csv((fs::path(out_dir) / "confusion.csv").string(), m.confusion);
}

Metrics train_and_report(const AppConfig& cfg, const Manifest& manifest, TrainOptions opts,
                         const Checkpoint* start) {
  const std::string& out = cfg.experiment.out_dir;
  fs::create_directories(out);

  TrainResult result =
      start ? finetune_noise_aware(*start, manifest, std::move(opts)) : train(manifest, opts);
  write_train_log((fs::path(out) / "train_log.csv").string(), result.log);

  Checkpoint ckpt{std::move(result.params), std::move(result.extras)};
  save_checkpoint((fs::path(out) / "checkpoint.tnet").string(), ckpt.params, ckpt.extras);

  Metrics m = evaluate(ckpt, manifest, cfg.experiment.eval_split);
  write_reports(out, m);
  return m;
}

}  // namespace

Metrics run_experiment(const AppConfig& cfg, std::ostream* progress) {
  const Manifest manifest = load_experiment_manifest(cfg);
  const std::vector<std::string> labels = manifest.label_set();

  TrainOptions opts;
  opts.net = build_net_spec(cfg, static_cast<int>(labels.size()));
  opts.data = {cfg.clip, cfg.stft, cfg.sample_rate, opts.net.window()};
  opts.opt = cfg.train;
  opts.progress = progress;
  if (cfg.augment.enabled) opts.augment = AugmentOptions{cfg.augment.spec, cfg.augment.ratio};

  NoiseBank bank;  // must outlive train()
  if (cfg.noise.enabled) {
    bank = load_noise_bank(cfg.noise.bank_dir);
    opts.noise = NoiseTrainOptions{&bank, cfg.noise.sampler, cfg.noise.corrupt_fraction};
  }
  return train_and_report(cfg, manifest, std::move(opts), nullptr);
}

Metrics run_finetune(const AppConfig& cfg, std::ostream* progress) {
  if (cfg.experiment.checkpoint.empty())
    throw std::invalid_argument("experiment.checkpoint is not set");
  if (!cfg.noise.enabled)
    throw std::invalid_argument("finetune requires the noise section to be enabled");
  const Manifest manifest = load_experiment_manifest(cfg);
  const Checkpoint start = load_checkpoint(cfg.experiment.checkpoint);

  TrainOptions opts;  // net/data are inherited from the checkpoint
  opts.opt = cfg.train;
  opts.progress = progress;
  if (cfg.augment.enabled) opts.augment = AugmentOptions{cfg.augment.spec, cfg.augment.ratio};
  NoiseBank bank = load_noise_bank(cfg.noise.bank_dir);
  opts.noise = NoiseTrainOptions{&bank, cfg.noise.sampler, cfg.noise.corrupt_fraction};
  return train_and_report(cfg, manifest, std::move(opts), &start);
}

Metrics run_eval(const AppConfig& cfg) {
  if (cfg.experiment.checkpoint.empty())
    throw std::invalid_argument("experiment.checkpoint is not set");
  const Manifest manifest = load_experiment_manifest(cfg);
  const Checkpoint ckpt = load_checkpoint(cfg.experiment.checkpoint);
  Metrics m = evaluate(ckpt, manifest, cfg.experiment.eval_split);
  fs::create_directories(cfg.experiment.out_dir);
  write_reports(cfg.experiment.out_dir, m);
  return m;
}

void run_preprocess(const AppConfig& cfg) {
  const Manifest manifest = load_experiment_manifest(cfg);
  const std::string& out = cfg.experiment.out_dir;
  fs::create_directories(fs::path(out) / "spectrograms");

  std::vector<Spectrogram> train_values;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const ManifestEntry& e = manifest.entries[i];
    const AudioSignal audio = load_wav(manifest.resolve(e));
    if (audio.sample_rate != cfg.sample_rate)
      throw std::runtime_error(e.path + ": sample rate " + std::to_string(audio.sample_rate) +
                               " does not match configured " + std::to_string(cfg.sample_rate));
    const std::vector<AudioSignal> clips = segment_clips(audio, cfg.clip);
    const std::string stem = fs::path(e.path).stem().string();
    for (std::size_t k = 0; k < clips.size(); ++k) {
      const Spectrogram spec = spectrogram_of(clips[k], cfg.stft);
      char name[256];
      std::snprintf(name, sizeof(name), "%03zu_%s_clip%03zu.tspg", i, stem.c_str(), k);
      save_spectrogram((fs::path(out) / "spectrograms" / name).string(), spec);
      if (e.split == "train") train_values.push_back(spec);
    }
  }
  if (train_values.empty())
    throw std::runtime_error("preprocess: manifest has no train split to derive stats from");
  save_norm_stats((fs::path(out) / "norm_stats.bin").string(), dataset_stats(train_values));
}

void run_features(const AppConfig& cfg) {
  const Manifest manifest = load_experiment_manifest(cfg);
  const std::string& out = cfg.experiment.out_dir;
  fs::create_directories(out);
  const std::vector<FeatureBundle> bundles =
      cfg.baseline.bundles.empty() ? all_feature_bundles() : cfg.baseline.bundles;

  for (const std::string& split : {"train", "val", "test"}) {
    // per-split feature matrices; skip splits the manifest doesn't have
    std::vector<std::vector<FeatureVector>> rows(bundles.size());
    std::vector<std::string> labels;
    for (const ManifestEntry& e : manifest.entries) {
      if (e.split != split) continue;
      const AudioSignal audio = load_wav(manifest.resolve(e));
      for (const AudioSignal& clip : segment_clips(audio, cfg.clip)) {
        for (std::size_t b = 0; b < bundles.size(); ++b)
          rows[b].push_back(feature_bundle(clip, bundles[b], cfg.stft));
        labels.push_back(e.label);
      }
    }
    if (labels.empty()) continue;
    for (std::size_t b = 0; b < bundles.size(); ++b) {
      const std::string name = to_string(bundles[b]) + "_" + split + ".csv";
      save_feature_csv((fs::path(out) / name).string(), rows[b], labels);
    }
  }
}

void run_sweep(const AppConfig& cfg, std::ostream* progress) {
  if (cfg.sweep.clip_ms.empty() || cfg.sweep.windows.empty())
    throw std::invalid_argument("sweep: empty grid");
  const std::string root = cfg.experiment.out_dir;
  fs::create_directories(root);
  std::ofstream summary(fs::path(root) / "sweep_summary.csv");
  summary << "clip_ms,lstm_window,accuracy\n";

  for (double clip_ms : cfg.sweep.clip_ms) {
    for (int window : cfg.sweep.windows) {
      AppConfig cell = cfg;
      cell.clip.clip_ms = clip_ms;
      cell.net.lstm_window = window;
      char name[64];
      std::snprintf(name, sizeof(name), "clip%g_L%d", clip_ms, window);
      cell.experiment.out_dir = (fs::path(root) / name).string();
      if (progress) *progress << "[sweep] " << name << "\n";
      const Metrics m = run_experiment(cell, progress);
      char row[128];
      std::snprintf(row, sizeof(row), "%g,%d,%.6f\n", clip_ms, window, m.accuracy);
      summary << row;
    }
  }
}

NoiseEvalReport run_noise_eval(const AppConfig& cfg, std::ostream* progress) {
  if (cfg.noise_eval.checkpoint.empty())
    throw std::invalid_argument("noise_eval.checkpoint is not set");
  if (cfg.noise_eval.snrs.empty()) throw std::invalid_argument("noise_eval: no SNRs given");
  const Manifest manifest = load_experiment_manifest(cfg);
  const Checkpoint ckpt = load_checkpoint(cfg.noise_eval.checkpoint);
  const NoiseBank bank = load_noise_bank(cfg.noise_eval.bank_dir);

  NoiseEvalReport r;
  r.categories = bank.category_names();
  r.snrs_db = cfg.noise_eval.snrs;
  r.accuracy.resize(static_cast<Eigen::Index>(r.categories.size()),
                    static_cast<Eigen::Index>(r.snrs_db.size()));
  r.clean_accuracy = evaluate(ckpt, manifest, cfg.experiment.eval_split).accuracy;

  for (std::size_t i = 0; i < r.categories.size(); ++i) {
    for (std::size_t j = 0; j < r.snrs_db.size(); ++j) {
      EvalCorruption c;
      c.bank = &bank;
      c.category = r.categories[i];
      c.snr_db = r.snrs_db[j];
      c.seed = cfg.train.seed ^ (0x9e3779b97f4a7c15ull * (i + 1)) ^
               (0xc2b2ae3d27d4eb4full * (j + 1));
      r.accuracy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          evaluate(ckpt, manifest, cfg.experiment.eval_split, c).accuracy;
      if (progress)
        *progress << "[noise-eval] " << r.categories[i] << " @ " << r.snrs_db[j] << " dB: "
                  << r.accuracy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                  << "\n";
    }
  }
  r.category_means = r.accuracy.rowwise().mean();
  r.snr_means = r.accuracy.colwise().mean();
  r.grand_mean = r.accuracy.mean();

  fs::create_directories(cfg.experiment.out_dir);
  write_noise_eval_csv((fs::path(cfg.experiment.out_dir) / "noise_eval.csv").string(), r);
  return r;
}

void write_noise_eval_csv(const std::string& path, const NoiseEvalReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "Noise,Clean";
  for (double s : r.snrs_db) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), ",%g", s);
    out << buf;
  }
  out << ",Mean\n";
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < r.categories.size(); ++i) {
    out << r.categories[i] << ',' << pct(r.clean_accuracy);
    for (Eigen::Index j = 0; j < r.accuracy.cols(); ++j)
      out << ',' << pct(r.accuracy(static_cast<Eigen::Index>(i), j));
    out << ',' << pct(r.category_means[static_cast<Eigen::Index>(i)]) << '\n';
  }
  out << "Mean," << pct(r.clean_accuracy);
  for (Eigen::Index j = 0; j < r.accuracy.cols(); ++j) out << ',' << pct(r.snr_means[j]);
  out << ',' << pct(r.grand_mean) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

LatencyReport bench_latency(const Checkpoint& ckpt, const std::string& work_dir, int iterations,
                            int warmup) {
  if (iterations <= 0) throw std::invalid_argument("bench: iterations must be positive");
  if (warmup < 0) throw std::invalid_argument("bench: warmup must be nonnegative");
  fs::create_directories(work_dir);

  // a fixed broadband clip: content doesn't matter, the work does
  AudioSignal clip;
  clip.sample_rate = ckpt.extras.sample_rate;
  const Eigen::Index n = duration_samples(clip.sample_rate, ckpt.extras.clip.clip_ms);
  std::mt19937_64 rng(0x5eedb16bull);
  std::normal_distribution<double> g(0.0, 0.1);
  clip.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) clip.samples[i] = g(rng);
  const std::string wav_path = (fs::path(work_dir) / "bench_clip.wav").string();
  save_wav(wav_path, clip);

  InferenceEngine engine(ckpt);
  std::vector<double> times_ms;
  times_ms.reserve(static_cast<std::size_t>(iterations));
  for (int it = 0; it < warmup + iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const AudioSignal loaded = load_wav(wav_path);
    volatile double sink = engine.step(loaded).sum();  // keep the work observable
    (void)sink;
    const auto t1 = std::chrono::steady_clock::now();
    if (it >= warmup)
      times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

  std::sort(times_ms.begin(), times_ms.end());
  const std::size_t m = times_ms.size();
  LatencyReport r;
  r.iterations = iterations;
  r.clip_ms = ckpt.extras.clip.clip_ms;
  r.median_ms = times_ms[m / 2];
  r.p95_ms = times_ms[std::min(m - 1, (m * 95) / 100)];
  r.mean_ms = 0.0;
  for (double t : times_ms) r.mean_ms += t;
  r.mean_ms /= double(m);
  r.realtime_factor = r.median_ms / r.clip_ms;
  return r;
}

void write_latency_json(const std::string& path, const LatencyReport& r) {
  nlohmann::ordered_json j;
  j["iterations"] = r.iterations;
  j["clip_ms"] = r.clip_ms;
  j["median_ms"] = r.median_ms;
  j["p95_ms"] = r.p95_ms;
  j["mean_ms"] = r.mean_ms;
  j["realtime_factor"] = r.realtime_factor;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::vector<BaselineRow> run_baselines(const AppConfig& cfg, std::ostream* progress) {
  const Manifest manifest = load_experiment_manifest(cfg);
  const std::vector<std::string> labels = manifest.label_set();
  const DatasetConfig data{cfg.clip, cfg.stft, cfg.sample_rate, 1};
  const ClipDataset train_ds = ClipDataset::load(manifest, "train", labels, data);
  const ClipDataset test_ds = ClipDataset::load(manifest, cfg.experiment.eval_split, labels, data);
  const std::vector<FeatureBundle> bundles =
      cfg.baseline.bundles.empty() ? all_feature_bundles() : cfg.baseline.bundles;

  fs::create_directories(cfg.experiment.out_dir);
  std::ofstream report(fs::path(cfg.experiment.out_dir) / "baseline_report.csv");
  report << "bundle,classifier,hyperparam,cv_accuracy,test_accuracy\n";

  auto extract = [&](const ClipDataset& ds, FeatureBundle b, std::vector<int>& out_labels) {
    std::vector<Eigen::VectorXd> rows;
    out_labels.clear();
    for (std::size_t rec = 0; rec < ds.num_recordings(); ++rec) {
      for (std::size_t k = 0; k < ds.clips_in(rec); ++k) {
        FeatureVector f = feature_bundle(ds.clip_audio(rec, k), b, cfg.stft);
        rows.push_back(std::move(f.values));
        out_labels.push_back(ds.recording_label(rec));
      }
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i];
    return x;
  };

  std::vector<BaselineRow> out_rows;
  for (FeatureBundle bundle : bundles) {
    LabeledFeatureSet train_set;
    train_set.num_classes = static_cast<int>(labels.size());
    train_set.x = extract(train_ds, bundle, train_set.labels);
    std::vector<int> test_labels;
    Eigen::MatrixXd test_x = extract(test_ds, bundle, test_labels);

    const Standardizer std_tf = Standardizer::fit(train_set.x, cfg.baseline.standardize_scale);
    train_set.x = std_tf.apply(train_set.x);
    test_x = std_tf.apply(test_x);

    auto score = [&](auto classify) {
      ConfusionMatrix cm(labels);
      for (Eigen::Index i = 0; i < test_x.rows(); ++i)
        cm.add(test_labels[static_cast<std::size_t>(i)], classify(test_x.row(i).transpose()));
      return compute_metrics(cm);
    };

    {
      const CvChoice cv =
          cross_validate_knn(train_set, cfg.baseline.knn_grid, cfg.baseline.folds, cfg.train.seed);
      BaselineRow row{bundle, "knn", double(cv.knn_k), cv.score,
                      score([&](const Eigen::VectorXd& q) {
                        return knn_classify(train_set, q, cv.knn_k);
                      })};
      out_rows.push_back(row);
    }
    {
      const CvChoice cv = cross_validate_svm(train_set, cfg.baseline.svm_lambda_grid,
                                             cfg.baseline.folds, cfg.baseline.svm_epochs,
                                             cfg.train.seed);
      const LinearSvm model =
          linear_svm_train(train_set, cv.svm_lambda, cfg.baseline.svm_epochs, cfg.train.seed);
      BaselineRow row{bundle, "svm", cv.svm_lambda, cv.score,
                      score([&](const Eigen::VectorXd& q) {
                        return linear_svm_classify(model, q);
                      })};
      out_rows.push_back(row);
    }

    for (std::size_t k = out_rows.size() - 2; k < out_rows.size(); ++k) {
      const BaselineRow& row = out_rows[k];
      const std::string stem =
          to_string(row.bundle) + "_" + row.classifier;
      write_metrics_json(
          (fs::path(cfg.experiment.out_dir) / (stem + "_metrics.json")).string(), row.test);
      char line[160];
      std::snprintf(line, sizeof(line), "%s,%s,%g,%.6f,%.6f\n",
                    to_string(row.bundle).c_str(), row.classifier.c_str(),
                    row.hyperparam, row.cv_accuracy, row.test.accuracy);
      report << line;
      if (progress)
        *progress << "[baseline] " << stem << ": cv " << row.cv_accuracy << ", test "
                  << row.test.accuracy << "\n";
    }
  }
  return out_rows;
}

}  // namespace terrain
