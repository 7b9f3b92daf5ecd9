#pragma once

#include "terrain/audio.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace terrain {

/// Ambient-noise recordings grouped by category name. Loaded from a
/// directory-per-category layout: bank_dir/<category>/*.wav.
struct NoiseBank {
  std::map<std::string, std::vector<AudioSignal>> categories;

  void validate() const;  // nonempty; every category nonempty
  std::vector<std::string> category_names() const;
};

NoiseBank load_noise_bank(const std::string& dir);

struct NoiseSamplerConfig {
  /// Per-category Dirichlet concentration. Empty map = 1.0 for every
  /// category in the bank (symmetric).
  std::map<std::string, double> dirichlet_alpha;
  double snr_mean_db = 10.0;
  double snr_std_db = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws (noise recording, target SNR) pairs. The category mixture weights
/// are a Dirichlet sample redrawn once per epoch; within an epoch each draw
/// picks a category from that mixture, a recording uniformly inside it, and
/// an SNR from N(snr_mean, snr_std).
class NoiseSampler {
 public:
  NoiseSampler(const NoiseBank& bank, const NoiseSamplerConfig& cfg);

  void begin_epoch(std::mt19937_64& rng);

  struct Draw {
    const AudioSignal* noise;
    std::string category;
    double snr_db;
  };
  Draw sample(std::mt19937_64& rng) const;

  /// Current epoch's category mixture (sums to 1).
  const Eigen::VectorXd& mixture() const { return mixture_; }
  const std::vector<std::string>& categories() const { return names_; }

 private:
  const NoiseBank* bank_;
  NoiseSamplerConfig cfg_;
  std::vector<std::string> names_;
  Eigen::VectorXd alphas_;
  Eigen::VectorXd mixture_;
};

/// Adds a noise segment to `clean` at the requested SNR. The segment starts
/// at a random point in `noise` and wraps around (concatenates) until it
/// covers the clean length. Gain g = sqrt(P_clean / (P_segment * 10^(snr/10)))
/// is computed from the actual wrapped segment, so the realized SNR is exact.
/// snr_db = +inf returns the clean signal (g -> 0). The sum is *not*
/// re-normalized and may exceed [-1, 1]; writers saturate.
AudioSignal mix_noise(const AudioSignal& clean, const AudioSignal& noise, double snr_db,
                      std::mt19937_64& rng);

}  // namespace terrain
