#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace terrain {

using Real = double;

/// Malformed container / header / truncated payload.
struct WavFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Well-formed WAV whose encoding we deliberately do not decode.
struct WavUnsupportedError : WavFormatError {
  using WavFormatError::WavFormatError;
};

/// Mono audio as amplitudes nominally in [-1, 1].
/// Loaded audio always satisfies the range; synthetic mixes may exceed it
/// (saturation happens at write time, not in memory).
struct AudioSignal {
  Eigen::ArrayXd samples;
  int sample_rate = 0;

  double duration_ms() const {
    return sample_rate > 0 ? 1000.0 * static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct ClipConfig {
  double clip_ms = 200.0;
  double overlap_ms = 0.0;

  void validate() const;
};

/// Number of samples covering `ms` milliseconds at `sample_rate` (rounded).
Eigen::Index duration_samples(int sample_rate, double ms);

/// Reads a RIFF/WAVE file. Accepts PCM16 and IEEE float32, any channel
/// count (channels are averaged to mono). Sample values map to [-1, 1]
/// (PCM16 divides by 32768). Throws WavFormatError on malformed input and
/// WavUnsupportedError on other encodings (8/24-bit, ADPCM, ...).
AudioSignal load_wav(const std::string& path);

/// Writes mono PCM16. Amplitudes are clamped to [-1, 1] first.
void save_wav(const std::string& path, const AudioSignal& signal);

/// Cuts a signal into fixed-length clips of clip_ms with the given overlap;
/// hop = clip - overlap. A short tail that does not fill a whole clip is
/// dropped. A signal shorter than one clip is an error.
std::vector<AudioSignal> segment_clips(const AudioSignal& signal, const ClipConfig& cfg);

}  // namespace terrain
