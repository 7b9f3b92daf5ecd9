#pragma once

#include "terrain/manifest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace terrain {

/// Recipe for one surface class: noise in one or two frequency bands,
/// optional narrow spectral lines, optional slow amplitude modulation.
/// Classes that share bands but differ in am_rate can only be told apart by
/// envelope dynamics; classes that differ only in line positions need
/// fine frequency resolution.
struct SurfaceSpec {
  std::string label;
  double band_lo = 0.0;
  double band_hi = 0.0;
  double band2_lo = 0.0;  // 0/0 disables the second band
  double band2_hi = 0.0;
  std::vector<double> line_freqs;
  double am_rate_hz = 0.0;  // 0 disables modulation
};

/// Nine synthetic surfaces spanning the difficulty ladder: three separable
/// by band pair alone, two pairs separable only by line positions, and one
/// pair separable only by modulation rate.
std::vector<SurfaceSpec> default_surface_table();

struct SynthConfig {
  int sample_rate = 44100;
  double recording_seconds = 4.2;
  int recordings_per_class = 15;
  int train_recordings = 10;  // remainder after train+val is the test split
  int val_recordings = 2;
  std::uint64_t seed = 0;
  std::vector<SurfaceSpec> surfaces;  // empty -> default_surface_table()

  void validate() const;
};

/// Writes <out_dir>/wav/<label>_<k>.wav for every class/recording plus
/// <out_dir>/manifest.csv, and returns the manifest (base_dir = out_dir).
/// Every recording gets its own location tag, so train/val/test splits are
/// recording-disjoint. Deterministic: same config -> identical bytes.
Manifest synthesize_corpus(const std::string& out_dir, const SynthConfig& cfg);

/// Writes a directory-per-category noise bank under out_dir:
/// white, pink, hum, chirp, babble. Deterministic like the corpus.
void synthesize_noise_bank(const std::string& out_dir, int sample_rate, double seconds,
                           int recordings_per_category, std::uint64_t seed);

}  // namespace terrain
