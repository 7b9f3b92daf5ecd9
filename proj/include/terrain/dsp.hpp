#pragma once

#include "terrain/audio.hpp"

#include <Eigen/Core>

#include <array>
#include <complex>
#include <random>
#include <string>
#include <vector>

namespace terrain {

/// Linear-magnitude floor added before taking the dB log, so silent bins map
/// to a finite -200 dB instead of -inf.
constexpr double kLogFloor = 1e-10;

struct StftConfig {
  int frame_len = 2048;
  double overlap_fraction = 0.5;  // fraction of frame shared by neighbours
  int kept_bins = 512;            // lowest-frequency rows retained

  int hop() const { return static_cast<int>(std::lround(frame_len * (1.0 - overlap_fraction))); }
  void validate() const;
  /// Frames produced for n samples; incomplete tail frames are dropped.
  Eigen::Index num_frames(Eigen::Index n) const;
};

/// w[n] = 0.54 - 0.46 cos(2*pi*n / (len-1)), the periodic-ends-matched
/// raised-cosine taper.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> hamming_window(int len);

extern template Eigen::VectorXd hamming_window<double>(int);
extern template Eigen::VectorXf hamming_window<float>(int);

/// Complex STFT: column j holds the full frame_len-point spectrum of the
/// windowed frame starting at j*hop. No zero padding; the signal must cover
/// at least one whole frame.
Eigen::MatrixXcd stft(const AudioSignal& clip, const StftConfig& cfg);

/// Log-power spectrogram with frequency metadata.
/// `values` is kept_bins x num_frames, entries 20*log10(|X| + 1e-10).
struct Spectrogram {
  Eigen::MatrixXd values;
  Eigen::VectorXd bin_freqs;    // Hz, strictly increasing, one per row
  Eigen::VectorXd frame_times;  // seconds, frame start, one per column
};

Spectrogram log_power_spectrogram(const Eigen::MatrixXcd& stft_out, const StftConfig& cfg,
                                  int sample_rate);

/// Convenience: stft + log-power in one go.
Spectrogram spectrogram_of(const AudioSignal& clip, const StftConfig& cfg);

/// Training-set statistics used to normalize every spectrogram afterwards.
struct NormStats {
  double global_max = 0.0;        // max |value| over the whole training set
  Eigen::MatrixXd mean_spectrum;  // element-wise mean of raw log-power values
};

/// All spectrograms must share one shape. global_max is taken over absolute
/// values, so a set dominated by large negative dB still scales into [-1, 1].
NormStats dataset_stats(const std::vector<Spectrogram>& specs);

/// out = spec/global_max - mean_spectrum/global_max. Normalizing the
/// training set and re-averaging gives an (element-wise) zero matrix.
Spectrogram normalize_spectrogram(const Spectrogram& spec, const NormStats& stats);

void save_norm_stats(const std::string& path, const NormStats& stats);
NormStats load_norm_stats(const std::string& path);

/// Ranges are inclusive; each field is sampled uniformly.
struct AugmentationSpec {
  std::array<int, 2> time_shift_frames{0, 0};
  std::array<int, 2> freq_shift_bins{0, 0};
  std::array<double, 2> time_stretch{1.0, 1.0};
  std::array<double, 2> gain_db{0.0, 0.0};

  void validate() const;
};

/// One concrete draw from an AugmentationSpec.
struct AugmentationParams {
  int time_shift = 0;
  int freq_shift = 0;
  double stretch = 1.0;
  double gain_db = 0.0;
};

/// Samples each field uniformly from its range, in a fixed order.
AugmentationParams sample_augmentation(const AugmentationSpec& aug, std::mt19937_64& rng);

/// Shape-preserving transform, applied in a fixed order: circular time
/// shift, frequency shift (vacated rows zeroed), time stretch (linear
/// re-interpolation back onto the original frame grid), then a flat gain
/// added in the log domain. Runs on raw (pre-normalization) values.
Eigen::MatrixXd apply_augmentation(const Eigen::MatrixXd& values, const AugmentationParams& p);

/// sample_augmentation + apply_augmentation on a full spectrogram.
Spectrogram augment(const Spectrogram& spec, const AugmentationSpec& aug, std::mt19937_64& rng);

/// Flat binary spectrogram: magic "TSPG", u32 rows, u32 cols, f64 bin
/// spacing (Hz), then row-major float32 values.
void save_spectrogram(const std::string& path, const Spectrogram& spec);

/// Loads the binary format above. Frame times are not stored, so the loaded
/// frame_times just number the frames 0,1,2,...
Spectrogram load_spectrogram(const std::string& path);

/// Plain numeric matrix, one row per frequency bin, comma separated.
void save_spectrogram_csv(const std::string& path, const Spectrogram& spec);

}  // namespace terrain
