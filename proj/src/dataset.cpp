#include "terrain/dataset.hpp"

#include "terrain/noise.hpp"

#include <algorithm>
#include <stdexcept>

namespace terrain {

void DatasetConfig::validate() const {
  clip.validate();
  stft.validate();
  if (sample_rate <= 0) throw std::invalid_argument("DatasetConfig: sample_rate must be positive");
  if (window < 1) throw std::invalid_argument("DatasetConfig: window must be >= 1");
}

ClipDataset ClipDataset::load(const Manifest& manifest, const std::string& split,
                              const std::vector<std::string>& labels, const DatasetConfig& cfg) {
  cfg.validate();
  validate_manifest(manifest);

  ClipDataset ds;
  ds.cfg_ = cfg;
  ds.labels_ = labels;
  ds.clip_len_ = duration_samples(cfg.sample_rate, cfg.clip.clip_ms);
  ds.hop_ = duration_samples(cfg.sample_rate, cfg.clip.clip_ms - cfg.clip.overlap_ms);
  ds.frames_per_clip_ = cfg.stft.num_frames(ds.clip_len_);
  if (ds.frames_per_clip_ < 1)
    throw std::invalid_argument("clip too short for one analysis frame");

  auto label_index = [&](const std::string& l) {
    const auto it = std::find(labels.begin(), labels.end(), l);
    if (it == labels.end()) throw std::invalid_argument("label '" + l + "' not in label set");
    return static_cast<int>(it - labels.begin());
  };

  for (const auto& entry : manifest.split(split)) {
    Recording rec;
    rec.audio = load_wav(manifest.resolve(entry));
    if (rec.audio.sample_rate != cfg.sample_rate)
      throw std::runtime_error("sample rate " + std::to_string(rec.audio.sample_rate) + " of " +
                               entry.path + " does not match configured " +
                               std::to_string(cfg.sample_rate));
    rec.label = label_index(entry.label);
    for (Eigen::Index s = 0; s + ds.clip_len_ <= rec.audio.samples.size(); s += ds.hop_)
      rec.starts.push_back(s);

    rec.clean.reserve(rec.starts.size());
    AudioSignal clip;
    clip.sample_rate = cfg.sample_rate;
    for (const auto s : rec.starts) {
      clip.samples = rec.audio.samples.segment(s, ds.clip_len_);
      rec.clean.push_back(spectrogram_of(clip, cfg.stft).values);
    }
    ds.recordings_.push_back(std::move(rec));
  }

  for (size_t r = 0; r < ds.recordings_.size(); ++r) {
    const auto clips = static_cast<int>(ds.recordings_[r].starts.size());
    for (int first = 0; first + cfg.window <= clips; ++first)
      ds.windows_.push_back({static_cast<int>(r), first});
  }
  return ds;
}

std::size_t ClipDataset::total_clips() const {
  std::size_t n = 0;
  for (const auto& r : recordings_) n += r.starts.size();
  return n;
}

std::vector<std::size_t> ClipDataset::class_window_counts() const {
  std::vector<std::size_t> counts(labels_.size(), 0);
  for (const auto& w : windows_) ++counts[static_cast<size_t>(recordings_[w.recording].label)];
  return counts;
}

std::vector<Eigen::MatrixXd> ClipDataset::window_raw(std::size_t w) const {
  const auto& ref = windows_.at(w);
  const auto& rec = recordings_[ref.recording];
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<size_t>(cfg_.window));
  for (int l = 0; l < cfg_.window; ++l)
    out.push_back(rec.clean[static_cast<size_t>(ref.first_clip + l)]);
  return out;
}

std::vector<Eigen::MatrixXd> ClipDataset::window_raw_corrupted(std::size_t w,
                                                               const AudioSignal& noise,
                                                               double snr_db,
                                                               std::mt19937_64& rng) const {
  const auto& ref = windows_.at(w);
  const auto& rec = recordings_[ref.recording];
  const Eigen::Index span_start = rec.starts[static_cast<size_t>(ref.first_clip)];
  const Eigen::Index span_len = static_cast<Eigen::Index>(cfg_.window - 1) * hop_ + clip_len_;

  AudioSignal span;
  span.sample_rate = cfg_.sample_rate;
  span.samples = rec.audio.samples.segment(span_start, span_len);
  const AudioSignal mixed = mix_noise(span, noise, snr_db, rng);

  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<size_t>(cfg_.window));
  AudioSignal clip;
  clip.sample_rate = cfg_.sample_rate;
  for (int l = 0; l < cfg_.window; ++l) {
    clip.samples = mixed.samples.segment(static_cast<Eigen::Index>(l) * hop_, clip_len_);
    out.push_back(spectrogram_of(clip, cfg_.stft).values);
  }
  return out;
}

void ClipDataset::normalize_window(std::vector<Eigen::MatrixXd>& window, const NormStats& stats) {
  if (!(stats.global_max > 0.0)) throw std::domain_error("normalize_window: zero global_max");
  // Same expression as normalize_spectrogram (divide first), so windows and
  // single-clip inference normalize bit-identically.
  for (auto& v : window) {
    if (v.rows() != stats.mean_spectrum.rows() || v.cols() != stats.mean_spectrum.cols())
      throw std::invalid_argument("normalize_window: shape does not match stats");
    v = v / stats.global_max - stats.mean_spectrum / stats.global_max;
  }
}

NormStats ClipDataset::normalization_stats() const {
  NormStats st;
  std::size_t n = 0;
  for (const auto& rec : recordings_) {
    for (const auto& v : rec.clean) {
      if (n == 0)
        st.mean_spectrum = Eigen::MatrixXd::Zero(v.rows(), v.cols());
      st.mean_spectrum += v;
      st.global_max = std::max(st.global_max, v.cwiseAbs().maxCoeff());
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("normalization_stats: dataset has no clips");
  st.mean_spectrum /= static_cast<double>(n);
  return st;
}

AudioSignal ClipDataset::clip_audio(std::size_t rec, std::size_t clip) const {
  const auto& r = recordings_.at(rec);
  AudioSignal out;
  out.sample_rate = cfg_.sample_rate;
  out.samples = r.audio.samples.segment(r.starts.at(clip), clip_len_);
  return out;
}

}  // namespace terrain
