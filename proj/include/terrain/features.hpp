#pragma once

#include "terrain/audio.hpp"
#include "terrain/dsp.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace terrain {

/// A feature is undefined on degenerate input (silent frame, constant
/// spectrum). Standalone ops throw this; feature_bundle converts it to a
/// zero value plus a warning flag.
struct UndefinedFeatureError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Magnitude spectrum of one analysis frame: the lowest N/2 bins of an
/// N-point DFT, with their center frequencies.
struct FrameSpectrum {
  Eigen::VectorXd magnitudes;
  Eigen::VectorXd bin_freqs;
  int window_size = 0;  // N

  void validate() const;
};

/// Fraction of sign changes: (1/2N) * sum |sgn(y[m]) - sgn(y[m-1])|,
/// with sgn(0) = +1. Frame must have at least two samples.
double zcr(const Eigen::ArrayXd& frame);

/// sum (x[m] * w[m])^2 over the frame.
double short_time_energy(const Eigen::ArrayXd& frame, const Eigen::ArrayXd& window);

/// Center of mass of the magnitude spectrum, in Hz.
double spectral_centroid(const FrameSpectrum& spec);

/// sqrt(sum (X_cur - X_prev)^2) / (N - 1), N the analysis window size.
double spectral_flux(const FrameSpectrum& prev, const FrameSpectrum& cur);

/// Smallest bin index K whose cumulative magnitude reaches 95% of the total.
int spectral_rolloff(const FrameSpectrum& spec);

/// Standardized third / fourth moments over the S = N/2 magnitude bins;
/// kurtosis has the Gaussian baseline 3 subtracted.
double spectral_skewness(const FrameSpectrum& spec);
double spectral_kurtosis(const FrameSpectrum& spec);

/// Mel scale used by the filterbank: 2595 * log10(1 + f/700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular mel filterbank on n_bins DFT bins of an N-point transform at
/// sample rate f_s. Each row is one filter, normalized to unit weight sum so
/// a flat power spectrum excites every band equally.
Eigen::MatrixXd mel_filterbank(int n_mels, int n_bins, int window_size, double sample_rate);

/// Mel-frequency cepstral coefficients: unit-area mel filterbank on the
/// power spectrum, floored log, orthonormal DCT-II, first n_coeffs kept.
Eigen::VectorXd mfcc(const FrameSpectrum& spec, int n_mels, int n_coeffs, double sample_rate);

enum class FeatureBundle { kGinna, kGinnaShape, kSpectral, kTimbral, kCepstralMfcc };

FeatureBundle feature_bundle_from_string(const std::string& name);
std::string to_string(FeatureBundle bundle);
std::vector<FeatureBundle> all_feature_bundles();

struct FeatureVector {
  Eigen::VectorXd values;
  std::vector<std::string> names;
  std::vector<uint8_t> undefined;  // 1 where the value was forced to 0

  void validate() const;
};

/// Clip-level features: the clip is cut into frames (frame_cfg length/hop),
/// per-frame features are computed, and each is aggregated by mean and
/// population standard deviation over the frames where it is defined.
/// A feature defined on no frame is stored as 0 with its flag set.
/// Bundles:
///   ginna         zcr, ste, centroid, rolloff(Hz), flux          (10 values)
///   ginna_shape   ginna + spectral std/skewness/kurtosis         (16 values)
///   spectral      centroid, rolloff(Hz), flux, skewness, kurtosis(10 values)
///   timbral       centroid/rolloff/flux/zcr stats, low-energy,
///                 first 5 mfcc stats                             (19 values)
///   cepstral_mfcc 13 mfcc stats                                  (26 values)
FeatureVector feature_bundle(const AudioSignal& clip, FeatureBundle bundle,
                             const StftConfig& frame_cfg = StftConfig{});

/// Header of feature names + label, then one CSV row per clip.
void save_feature_csv(const std::string& path, const std::vector<FeatureVector>& rows,
                      const std::vector<std::string>& labels);

}  // namespace terrain
