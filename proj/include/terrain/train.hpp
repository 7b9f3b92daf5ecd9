#pragma once

#include "terrain/dataset.hpp"
#include "terrain/metrics.hpp"
#include "terrain/model.hpp"
#include "terrain/noise.hpp"
#include "terrain/optim.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace terrain {

struct AugmentOptions {
  AugmentationSpec spec;
  double ratio = 0.5;  // probability that a training sample is augmented
};

struct NoiseTrainOptions {
  const NoiseBank* bank = nullptr;
  NoiseSamplerConfig sampler;
  double corrupt_fraction = 0.5;  // probability a sample gets noise mixed in
};

struct TrainOptions {
  NetworkSpec net;
  DatasetConfig data;
  TrainConfig opt;
  std::optional<AugmentOptions> augment;
  std::optional<NoiseTrainOptions> noise;
  std::ostream* progress = nullptr;  // optional human-readable progress lines
};

struct TrainLogRow {
  int iter;
  double lr;
  double loss;
  double train_acc;
};

struct TrainResult {
  ParamStore params;
  CheckpointExtras extras;  // labels, configs, norm stats, run metadata
  std::vector<TrainLogRow> log;
};

/// Minibatch SGD with momentum under the poly learning-rate schedule.
/// Deterministic given (seed, data, config): all randomness (init, shuffle,
/// dropout, noise, augmentation) comes from fixed per-purpose streams derived
/// from cfg.opt.seed. Aborts with a diagnostic if the loss goes non-finite.
TrainResult train(const Manifest& manifest, const TrainOptions& opts);

/// Resumes from a clean checkpoint at one tenth of its recorded initial
/// learning rate, with noise corruption enabled. Front-end geometry and the
/// normalization statistics are inherited from the checkpoint. `opts.net`
/// and `opts.data` are ignored; `opts.noise` is required.
TrainResult finetune_noise_aware(const Checkpoint& start, const Manifest& manifest,
                                 TrainOptions opts);

/// CSV rows `iter,lr,loss,train_acc` with full float round-trip precision.
void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log);

/// Optional test-time corruption: noise drawn uniformly from one category,
/// mixed at a fixed SNR. +inf dB means no corruption.
struct EvalCorruption {
  const NoiseBank* bank = nullptr;
  std::string category;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

/// Runs the checkpointed model over a manifest split and scores it. The
/// manifest's label set must match the checkpoint's.
Metrics evaluate(const Checkpoint& ckpt, const Manifest& manifest, const std::string& split,
                 const std::optional<EvalCorruption>& corruption = std::nullopt);

}  // namespace terrain
