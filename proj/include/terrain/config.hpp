#pragma once

#include "terrain/audio.hpp"
#include "terrain/dsp.hpp"
#include "terrain/features.hpp"
#include "terrain/model.hpp"
#include "terrain/noise.hpp"
#include "terrain/optim.hpp"
#include "terrain/synth.hpp"

#include <string>
#include <vector>

namespace terrain {

/// Network shape as configured; input_bins/input_frames/num_classes are
/// derived later from the front-end config and the manifest's label set.
struct NetConfig {
  Variant variant = Variant::kM4;
  std::array<int, 3> conv_channels{64, 128, 256};
  std::array<int, 3> fc_widths{512, 256, 128};
  int lstm_hidden = 128;
  double dropout = 0.5;
  int lstm_window = 5;
};

struct AugmentConfig {
  bool enabled = false;
  double ratio = 0.5;
  AugmentationSpec spec;
};

struct NoiseConfig {
  bool enabled = false;
  std::string bank_dir;
  double corrupt_fraction = 0.5;
  NoiseSamplerConfig sampler;
};

struct ExperimentConfig {
  std::string manifest;
  std::string out_dir = "out";
  std::string eval_split = "test";
  std::string checkpoint;  // consumed by eval / finetune-noise
};

struct BaselineConfig {
  std::vector<FeatureBundle> bundles;  // empty = all bundles
  std::vector<int> knn_grid{1, 3, 5, 7, 9};
  std::vector<double> svm_lambda_grid{1e-4, 1e-3, 1e-2, 1e-1};
  int folds = 5;
  int svm_epochs = 30;
  bool standardize_scale = true;  // mean removal always happens
};

struct BenchConfig {
  std::string checkpoint;
  int iterations = 200;
  int warmup = 20;
};

struct NoiseEvalConfig {
  std::string checkpoint;
  std::string bank_dir;
  std::vector<double> snrs{30, 20, 10, 0, -10};
};

struct SweepConfig {
  std::vector<double> clip_ms{200, 250, 300};
  std::vector<int> windows{2, 3, 4, 5, 6};
};

struct SynthSection {
  SynthConfig corpus;
  bool with_noise_bank = true;
  double noise_seconds = 5.0;
  int noise_recordings = 3;
};

/// Whole-app configuration, one JSON file with optional sections. Missing
/// keys keep their defaults; unknown keys are rejected so typos surface.
struct AppConfig {
  int sample_rate = 44100;
  ClipConfig clip;
  StftConfig stft;
  NetConfig net;
  TrainConfig train;
  AugmentConfig augment;
  NoiseConfig noise;
  SynthSection synth;
  ExperimentConfig experiment;
  BaselineConfig baseline;
  BenchConfig bench;
  NoiseEvalConfig noise_eval;
  SweepConfig sweep;
};

AppConfig parse_app_config(const std::string& json_text);
AppConfig load_app_config(const std::string& path);  // empty path -> all defaults

}  // namespace terrain
