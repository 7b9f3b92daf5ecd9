#pragma once

#include "terrain/audio.hpp"
#include "terrain/dsp.hpp"
#include "terrain/manifest.hpp"

#include <random>
#include <string>
#include <vector>

namespace terrain {

struct DatasetConfig {
  ClipConfig clip;
  StftConfig stft;
  int sample_rate = 44100;
  int window = 1;  // consecutive clips per sample (LSTM window L)

  void validate() const;
};

/// One split of a manifest, fully loaded: audio kept for on-the-fly noise
/// corruption, clean log-power spectrograms cached per clip. A sample is a
/// window of `window` consecutive clips of one recording (stride 1).
class ClipDataset {
 public:
  static ClipDataset load(const Manifest& manifest, const std::string& split,
                          const std::vector<std::string>& labels, const DatasetConfig& cfg);

  std::size_t size() const { return windows_.size(); }  // number of windows
  int label_of(std::size_t w) const { return recordings_[windows_[w].recording].label; }
  int num_classes() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const DatasetConfig& config() const { return cfg_; }
  Eigen::Index frames_per_clip() const { return frames_per_clip_; }
  std::size_t total_clips() const;

  /// Windows per class, for balance checks.
  std::vector<std::size_t> class_window_counts() const;

  /// Clean raw (pre-normalization) log-power spectrogram values of window w.
  std::vector<Eigen::MatrixXd> window_raw(std::size_t w) const;

  /// Same window with `noise` mixed into the audio span at snr_db before the
  /// front-end. Draws the noise start point from rng.
  std::vector<Eigen::MatrixXd> window_raw_corrupted(std::size_t w, const AudioSignal& noise,
                                                    double snr_db, std::mt19937_64& rng) const;

  /// In-place (v - mean)/max normalization of every clip in a window.
  static void normalize_window(std::vector<Eigen::MatrixXd>& window, const NormStats& stats);

  /// Normalization statistics over every clean clip spectrogram (same
  /// definition as dataset_stats: abs-max and element-wise mean).
  NormStats normalization_stats() const;

  // Per-clip access for feature extraction.
  std::size_t num_recordings() const { return recordings_.size(); }
  std::size_t clips_in(std::size_t rec) const { return recordings_[rec].starts.size(); }
  int recording_label(std::size_t rec) const { return recordings_[rec].label; }
  AudioSignal clip_audio(std::size_t rec, std::size_t clip) const;

 private:
  struct Recording {
    AudioSignal audio;
    int label = -1;
    std::vector<Eigen::Index> starts;
    std::vector<Eigen::MatrixXd> clean;  // cached raw log-power per clip
  };
  struct WindowRef {
    int recording;
    int first_clip;
  };

  DatasetConfig cfg_;
  std::vector<std::string> labels_;
  std::vector<Recording> recordings_;
  std::vector<WindowRef> windows_;
  Eigen::Index clip_len_ = 0;
  Eigen::Index hop_ = 0;
  Eigen::Index frames_per_clip_ = 0;
};

}  // namespace terrain
