#include "terrain/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

namespace terrain {

void StftConfig::validate() const {
  if (frame_len < 2) throw std::invalid_argument("frame_len must be >= 2");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
    throw std::invalid_argument("overlap_fraction must lie in [0, 1)");
  if (hop() < 1) throw std::invalid_argument("hop rounds to zero");
  if (kept_bins < 1 || kept_bins > frame_len)
    throw std::invalid_argument("kept_bins must lie in [1, frame_len]");
}

Eigen::Index StftConfig::num_frames(Eigen::Index n) const {
  if (n < frame_len) return 0;
  return 1 + (n - frame_len) / hop();
}

template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> hamming_window(int len) {
  if (len < 1) throw std::invalid_argument("window length must be positive");
  Eigen::Vector<Scalar, Eigen::Dynamic> w(len);
  if (len == 1) {
    w[0] = Scalar(1);
    return w;
  }
  const Scalar c = Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(len - 1);
  for (int n = 0; n < len; ++n) w[n] = Scalar(0.54) - Scalar(0.46) * std::cos(c * Scalar(n));
  return w;
}

template Eigen::VectorXd hamming_window<double>(int);
template Eigen::VectorXf hamming_window<float>(int);

Eigen::MatrixXcd stft(const AudioSignal& clip, const StftConfig& cfg) {
  cfg.validate();
  const Eigen::Index frames = cfg.num_frames(clip.samples.size());
  if (frames == 0)
    throw std::invalid_argument("clip shorter than one analysis frame (" +
                                std::to_string(clip.samples.size()) + " < " +
                                std::to_string(cfg.frame_len) + " samples)");

  const Eigen::VectorXd window = hamming_window<double>(cfg.frame_len);
  const Eigen::Index hop = cfg.hop();

  Eigen::MatrixXcd out(cfg.frame_len, frames);
  Eigen::FFT<double> fft;
  Eigen::VectorXd buf(cfg.frame_len);
  Eigen::VectorXcd spec(cfg.frame_len);
  for (Eigen::Index j = 0; j < frames; ++j) {
    buf = clip.samples.segment(j * hop, cfg.frame_len).matrix().cwiseProduct(window);
    fft.fwd(spec, buf);
    out.col(j) = spec;
  }
  return out;
}

Spectrogram log_power_spectrogram(const Eigen::MatrixXcd& stft_out, const StftConfig& cfg,
                                  int sample_rate) {
  cfg.validate();
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
  if (stft_out.rows() != cfg.frame_len)
    throw std::invalid_argument("stft rows do not match frame_len");

  Spectrogram s;
  s.values = (stft_out.topRows(cfg.kept_bins).cwiseAbs().array() + kLogFloor).log10() * 20.0;
  s.bin_freqs = Eigen::VectorXd::LinSpaced(cfg.kept_bins, 0.0, double(cfg.kept_bins - 1)) *
                (double(sample_rate) / cfg.frame_len);
  s.frame_times = Eigen::VectorXd::LinSpaced(stft_out.cols(), 0.0, double(stft_out.cols() - 1)) *
                  (double(cfg.hop()) / sample_rate);
  return s;
}

Spectrogram spectrogram_of(const AudioSignal& clip, const StftConfig& cfg) {
  return log_power_spectrogram(stft(clip, cfg), cfg, clip.sample_rate);
}

NormStats dataset_stats(const std::vector<Spectrogram>& specs) {
  if (specs.empty()) throw std::invalid_argument("dataset_stats: empty spectrogram set");
  const auto rows = specs.front().values.rows();
  const auto cols = specs.front().values.cols();

  NormStats st;
  st.mean_spectrum = Eigen::MatrixXd::Zero(rows, cols);
  st.global_max = 0.0;
  for (const auto& s : specs) {
    if (s.values.rows() != rows || s.values.cols() != cols)
      throw std::invalid_argument("dataset_stats: spectrogram shapes differ");
    st.mean_spectrum += s.values;
    st.global_max = std::max(st.global_max, s.values.cwiseAbs().maxCoeff());
  }
  st.mean_spectrum /= static_cast<double>(specs.size());
  return st;
}

Spectrogram normalize_spectrogram(const Spectrogram& spec, const NormStats& stats) {
  if (!(stats.global_max > 0.0) || !std::isfinite(stats.global_max))
    throw std::domain_error("normalize_spectrogram: global_max must be finite and nonzero");
  if (spec.values.rows() != stats.mean_spectrum.rows() ||
      spec.values.cols() != stats.mean_spectrum.cols())
    throw std::invalid_argument("normalize_spectrogram: shape does not match stats");

  Spectrogram out;
  out.values = spec.values / stats.global_max - stats.mean_spectrum / stats.global_max;
  out.bin_freqs = spec.bin_freqs;
  out.frame_times = spec.frame_times;
  return out;
}

void AugmentationSpec::validate() const {
  if (time_shift_frames[0] > time_shift_frames[1] || freq_shift_bins[0] > freq_shift_bins[1] ||
      time_stretch[0] > time_stretch[1] || gain_db[0] > gain_db[1])
    throw std::invalid_argument("augmentation range has lo > hi");
  if (!(time_stretch[0] > 0.0)) throw std::invalid_argument("time stretch factors must be positive");
}

AugmentationParams sample_augmentation(const AugmentationSpec& aug, std::mt19937_64& rng) {
  aug.validate();
  // Sampling order is part of the contract (reproducibility across runs).
  AugmentationParams p;
  p.time_shift = std::uniform_int_distribution<int>(aug.time_shift_frames[0],
                                                    aug.time_shift_frames[1])(rng);
  p.freq_shift =
      std::uniform_int_distribution<int>(aug.freq_shift_bins[0], aug.freq_shift_bins[1])(rng);
  p.stretch = std::uniform_real_distribution<double>(aug.time_stretch[0], aug.time_stretch[1])(rng);
  p.gain_db = std::uniform_real_distribution<double>(aug.gain_db[0], aug.gain_db[1])(rng);
  return p;
}

Eigen::MatrixXd apply_augmentation(const Eigen::MatrixXd& values, const AugmentationParams& p) {
  const Eigen::Index rows = values.rows();
  const Eigen::Index cols = values.cols();
  if (rows == 0 || cols == 0) throw std::invalid_argument("augment: empty spectrogram");
  if (!(p.stretch > 0.0)) throw std::invalid_argument("augment: stretch must be positive");

  // 1. circular shift along time
  Eigen::MatrixXd shifted(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    Eigen::Index dst = (j + p.time_shift) % cols;
    if (dst < 0) dst += cols;
    shifted.col(dst) = values.col(j);
  }

  // 2. frequency shift; rows pushed off the edge vanish, vacated rows are zero
  Eigen::MatrixXd fshifted = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index dst = r + p.freq_shift;
    if (dst >= 0 && dst < rows) fshifted.row(dst) = shifted.row(r);
  }

  // 3. time stretch, then linear re-interpolation back onto the original
  //    cols-frame grid, so the shape never changes
  Eigen::MatrixXd stretched(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    double pos = static_cast<double>(j) / p.stretch;
    pos = std::min(pos, static_cast<double>(cols - 1));
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, cols - 1);
    const double frac = pos - static_cast<double>(lo);
    stretched.col(j) = (1.0 - frac) * fshifted.col(lo) + frac * fshifted.col(hi);
  }

  // 4. flat gain in the log domain
  return stretched.array() + p.gain_db;
}

Spectrogram augment(const Spectrogram& spec, const AugmentationSpec& aug, std::mt19937_64& rng) {
  Spectrogram out;
  out.values = apply_augmentation(spec.values, sample_augmentation(aug, rng));
  out.bin_freqs = spec.bin_freqs;
  out.frame_times = spec.frame_times;
  return out;
}

namespace {

void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

}  // namespace

void save_spectrogram(const std::string& path, const Spectrogram& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  const auto rows = static_cast<uint32_t>(spec.values.rows());
  const auto cols = static_cast<uint32_t>(spec.values.cols());
  const double spacing = spec.bin_freqs.size() > 1 ? spec.bin_freqs[1] - spec.bin_freqs[0] : 0.0;

  write_bytes(out, "TSPG", 4);
  write_bytes(out, &rows, 4);
  write_bytes(out, &cols, 4);
  write_bytes(out, &spacing, 8);
  std::vector<float> row(cols);
  for (uint32_t r = 0; r < rows; ++r) {
    for (uint32_t c = 0; c < cols; ++c) row[c] = static_cast<float>(spec.values(r, c));
    write_bytes(out, row.data(), sizeof(float) * cols);
  }
  if (!out) throw std::runtime_error("short write: " + path);
}

Spectrogram load_spectrogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open spectrogram file: " + path);

  char magic[4];
  uint32_t rows = 0, cols = 0;
  double spacing = 0.0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  in.read(reinterpret_cast<char*>(&spacing), 8);
  if (!in || std::memcmp(magic, "TSPG", 4) != 0)
    throw std::runtime_error("bad spectrogram header in " + path);
  if (rows == 0 || cols == 0) throw std::runtime_error("empty spectrogram in " + path);

  Spectrogram s;
  s.values.resize(rows, cols);
  std::vector<float> row(cols);
  for (uint32_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(sizeof(float) * cols));
    if (!in) throw std::runtime_error("truncated spectrogram payload in " + path);
    for (uint32_t c = 0; c < cols; ++c) s.values(r, c) = row[c];
  }
  s.bin_freqs = Eigen::VectorXd::LinSpaced(rows, 0.0, double(rows - 1)) * spacing;
  s.frame_times = Eigen::VectorXd::LinSpaced(cols, 0.0, double(cols - 1));
  return s;
}

void save_spectrogram_csv(const std::string& path, const Spectrogram& spec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(10);
  for (Eigen::Index r = 0; r < spec.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < spec.values.cols(); ++c) {
      if (c) out << ',';
      out << spec.values(r, c);
    }
    out << '\n';
  }
}

void save_norm_stats(const std::string& path, const NormStats& stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const auto rows = static_cast<uint32_t>(stats.mean_spectrum.rows());
  const auto cols = static_cast<uint32_t>(stats.mean_spectrum.cols());
  write_bytes(out, "TNRM", 4);
  write_bytes(out, &rows, 4);
  write_bytes(out, &cols, 4);
  write_bytes(out, &stats.global_max, 8);
  for (uint32_t r = 0; r < rows; ++r)
    for (uint32_t c = 0; c < cols; ++c) {
      double v = stats.mean_spectrum(r, c);
      write_bytes(out, &v, 8);
    }
  if (!out) throw std::runtime_error("short write: " + path);
}

NormStats load_norm_stats(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open stats file: " + path);
  char magic[4];
  uint32_t rows = 0, cols = 0;
  NormStats st;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  in.read(reinterpret_cast<char*>(&st.global_max), 8);
  if (!in || std::memcmp(magic, "TNRM", 4) != 0)
    throw std::runtime_error("bad stats header in " + path);
  st.mean_spectrum.resize(rows, cols);
  for (uint32_t r = 0; r < rows; ++r)
    for (uint32_t c = 0; c < cols; ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      st.mean_spectrum(r, c) = v;
    }
  if (!in) throw std::runtime_error("truncated stats payload in " + path);
  return st;
}

}  // namespace terrain
