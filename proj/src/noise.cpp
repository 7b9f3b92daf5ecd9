#include "terrain/noise.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace terrain {

namespace fs = std::filesystem;

void NoiseBank::validate() const {
  if (categories.empty()) throw std::invalid_argument("noise bank has no categories");
  for (const auto& [name, signals] : categories) {
    if (signals.empty()) throw std::invalid_argument("noise category '" + name + "' is empty");
    for (const auto& s : signals)
      if (s.samples.size() == 0 || s.sample_rate <= 0)
        throw std::invalid_argument("invalid noise recording in category '" + name + "'");
  }
}

std::vector<std::string> NoiseBank::category_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : categories) names.push_back(name);
  return names;  // std::map keeps them sorted
}

NoiseBank load_noise_bank(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("noise bank directory not found: " + dir);
  NoiseBank bank;
  std::vector<fs::path> cat_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) cat_dirs.push_back(entry.path());
  std::sort(cat_dirs.begin(), cat_dirs.end());

  for (const auto& cat : cat_dirs) {
    std::vector<fs::path> wavs;
    for (const auto& entry : fs::directory_iterator(cat))
      if (entry.is_regular_file() && entry.path().extension() == ".wav")
        wavs.push_back(entry.path());
    std::sort(wavs.begin(), wavs.end());
    if (wavs.empty()) continue;
    auto& signals = bank.categories[cat.filename().string()];
    for (const auto& w : wavs) signals.push_back(load_wav(w.string()));
  }
  bank.validate();
  return bank;
}

void NoiseSamplerConfig::validate() const {
  for (const auto& [name, a] : dirichlet_alpha)
    if (!(a > 0.0)) throw std::invalid_argument("dirichlet alpha for '" + name + "' must be > 0");
  if (snr_std_db < 0.0) throw std::invalid_argument("snr_std_db must be nonnegative");
}

NoiseSampler::NoiseSampler(const NoiseBank& bank, const NoiseSamplerConfig& cfg)
    : bank_(&bank), cfg_(cfg) {
  bank.validate();
  cfg.validate();
  names_ = bank.category_names();
  alphas_.resize(static_cast<Eigen::Index>(names_.size()));
  for (size_t i = 0; i < names_.size(); ++i) {
    if (cfg.dirichlet_alpha.empty()) {
      alphas_[static_cast<Eigen::Index>(i)] = 1.0;
    } else {
      auto it = cfg.dirichlet_alpha.find(names_[i]);
      if (it == cfg.dirichlet_alpha.end())
        throw std::invalid_argument("no dirichlet alpha for noise category '" + names_[i] + "'");
      alphas_[static_cast<Eigen::Index>(i)] = it->second;
    }
  }
  // A usable mixture exists even before the first begin_epoch call.
  mixture_ = alphas_ / alphas_.sum();
}

void NoiseSampler::begin_epoch(std::mt19937_64& rng) {
  // Dirichlet via normalized gamma draws.
  Eigen::VectorXd g(alphas_.size());
  for (Eigen::Index i = 0; i < alphas_.size(); ++i) {
    std::gamma_distribution<double> gamma(alphas_[i], 1.0);
    double v = gamma(rng);
    // A zero draw (possible underflow at tiny alphas) would make the
    // mixture degenerate; nudge to the smallest positive normal.
    g[i] = std::max(v, std::numeric_limits<double>::min());
  }
  mixture_ = g / g.sum();
}

NoiseSampler::Draw NoiseSampler::sample(std::mt19937_64& rng) const {
  std::discrete_distribution<int> cat(mixture_.data(), mixture_.data() + mixture_.size());
  const int c = cat(rng);
  const auto& signals = bank_->categories.at(names_[static_cast<size_t>(c)]);
  std::uniform_int_distribution<size_t> pick(0, signals.size() - 1);
  const auto& noise = signals[pick(rng)];
  double snr = cfg_.snr_mean_db;
  if (cfg_.snr_std_db > 0.0)
    snr = std::normal_distribution<double>(cfg_.snr_mean_db, cfg_.snr_std_db)(rng);
  return {&noise, names_[static_cast<size_t>(c)], snr};
}

AudioSignal mix_noise(const AudioSignal& clean, const AudioSignal& noise, double snr_db,
                      std::mt19937_64& rng) {
  if (clean.samples.size() == 0 || noise.samples.size() == 0)
    throw std::invalid_argument("mix_noise: empty signal");

  const Eigen::Index n = clean.samples.size();
  const Eigen::Index m = noise.samples.size();
  std::uniform_int_distribution<Eigen::Index> start_dist(0, m - 1);
  const Eigen::Index start = start_dist(rng);

  AudioSignal out;
  out.sample_rate = clean.sample_rate;

  if (std::isinf(snr_db) && snr_db > 0.0) {  // infinite SNR: no noise at all
    out.samples = clean.samples;
    return out;
  }

  // Wrap the noise from `start` until it covers the clean length.
  Eigen::ArrayXd segment(n);
  for (Eigen::Index i = 0; i < n; ++i) segment[i] = noise.samples[(start + i) % m];

  const double p_clean = clean.samples.square().mean();
  const double p_seg = segment.square().mean();
  if (!(p_clean > 0.0)) throw std::domain_error("mix_noise: clean signal has zero power");
  if (!(p_seg > 0.0)) throw std::domain_error("mix_noise: noise segment has zero power");

  const double gain = std::sqrt(p_clean / (p_seg * std::pow(10.0, snr_db / 10.0)));
  out.samples = clean.samples + gain * segment;
  return out;
}

}  // namespace terrain
