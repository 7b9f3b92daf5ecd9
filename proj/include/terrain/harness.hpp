#pragma once

#include "terrain/classifiers.hpp"
#include "terrain/config.hpp"
#include "terrain/metrics.hpp"
#include "terrain/model.hpp"
#include "terrain/train.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace terrain {

/// Trains the configured variant on cfg.experiment.manifest and writes
/// checkpoint.tnet (+ json sidecar), train_log.csv, metrics.json and
/// confusion.csv into cfg.experiment.out_dir. Returns the eval-split metrics.
Metrics run_experiment(const AppConfig& cfg, std::ostream* progress = nullptr);

/// Noise-aware fine-tuning of cfg.experiment.checkpoint; same outputs as
/// run_experiment. Requires the noise section to be enabled.
Metrics run_finetune(const AppConfig& cfg, std::ostream* progress = nullptr);

/// Evaluates cfg.experiment.checkpoint on the configured split; writes
/// metrics.json + confusion.csv.
Metrics run_eval(const AppConfig& cfg);

/// Writes every clip's log-power spectrogram under out_dir/spectrograms and
/// the train-split normalization statistics to out_dir/norm_stats.bin.
void run_preprocess(const AppConfig& cfg);

/// Extracts the configured feature bundles for every split into
/// out_dir/<bundle>_<split>.csv.
void run_features(const AppConfig& cfg);

/// Clip-length x LSTM-window grid; each cell runs run_experiment into
/// out_dir/clip<ms>_L<w>/ and the per-cell accuracies land in
/// out_dir/sweep_summary.csv.
void run_sweep(const AppConfig& cfg, std::ostream* progress = nullptr);

struct NoiseEvalReport {
  std::vector<std::string> categories;
  std::vector<double> snrs_db;
  Eigen::MatrixXd accuracy;  // categories x snrs, fractions in [0,1]
  double clean_accuracy = 0.0;
  Eigen::VectorXd category_means;
  Eigen::VectorXd snr_means;
  double grand_mean = 0.0;
};

/// Accuracy grid of a checkpoint under every noise category at each SNR.
NoiseEvalReport run_noise_eval(const AppConfig& cfg, std::ostream* progress = nullptr);

/// Rows = categories plus a final Mean row; columns = Clean, one per SNR,
/// then the per-category mean. Percentages.
void write_noise_eval_csv(const std::string& path, const NoiseEvalReport& report);

struct LatencyReport {
  int iterations = 0;
  double clip_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double mean_ms = 0.0;
  double realtime_factor = 0.0;  // median latency / clip duration
};

/// Times the full WAV -> probabilities path (file read, spectrogram,
/// normalization, network) over `iterations` single-threaded passes after
/// `warmup` discarded ones. A deterministic test clip is written under
/// work_dir. iterations must be positive.
LatencyReport bench_latency(const Checkpoint& ckpt, const std::string& work_dir, int iterations,
                            int warmup);

void write_latency_json(const std::string& path, const LatencyReport& report);

struct BaselineRow {
  FeatureBundle bundle;
  std::string classifier;  // "knn" or "svm"
  double hyperparam = 0.0; // chosen k or lambda
  double cv_accuracy = 0.0;
  Metrics test;
};

/// Feature bundle x {kNN, linear SVM} grid with cross-validated
/// hyperparameters; trains on the train split, scores the eval split.
/// Writes baseline_report.csv plus one metrics JSON per cell.
std::vector<BaselineRow> run_baselines(const AppConfig& cfg, std::ostream* progress = nullptr);

}  // namespace terrain
