#include "terrain/features.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>

namespace terrain {

namespace {

double sgn(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace

void FrameSpectrum::validate() const {
  if (window_size < 2) throw std::invalid_argument("FrameSpectrum: window_size must be >= 2");
  if (magnitudes.size() != window_size / 2)
    throw std::invalid_argument("FrameSpectrum: expected N/2 magnitude bins");
  if (bin_freqs.size() != magnitudes.size())
    throw std::invalid_argument("FrameSpectrum: bin_freqs length mismatch");
  if ((magnitudes.array() < 0.0).any() || !magnitudes.allFinite())
    throw std::invalid_argument("FrameSpectrum: magnitudes must be finite and nonnegative");
}

double zcr(const Eigen::ArrayXd& frame) {
  const Eigen::Index n = frame.size();
  if (n < 2) throw std::invalid_argument("zcr: frame needs at least 2 samples");
  double acc = 0.0;
  for (Eigen::Index m = 1; m < n; ++m) acc += std::abs(sgn(frame[m]) - sgn(frame[m - 1]));
  return acc / (2.0 * static_cast<double>(n));
}

double short_time_energy(const Eigen::ArrayXd& frame, const Eigen::ArrayXd& window) {
  if (frame.size() != window.size())
    throw std::invalid_argument("short_time_energy: frame/window length mismatch");
  return (frame * window).square().sum();
}

double spectral_centroid(const FrameSpectrum& spec) {
  const double total = spec.magnitudes.sum();
  if (!(total > 0.0)) throw UndefinedFeatureError("spectral_centroid: zero spectrum");
  return spec.bin_freqs.dot(spec.magnitudes) / total;
}

double spectral_flux(const FrameSpectrum& prev, const FrameSpectrum& cur) {
  if (prev.magnitudes.size() != cur.magnitudes.size() || prev.window_size != cur.window_size)
    throw std::invalid_argument("spectral_flux: frame spectra differ in shape");
  if (cur.window_size < 2) throw std::invalid_argument("spectral_flux: window size must be >= 2");
  return (cur.magnitudes - prev.magnitudes).norm() / static_cast<double>(cur.window_size - 1);
}

int spectral_rolloff(const FrameSpectrum& spec) {
  const double total = spec.magnitudes.sum();
  if (!(total > 0.0)) throw UndefinedFeatureError("spectral_rolloff: zero spectrum");
  const double target = 0.95 * total;
  double cum = 0.0;
  for (Eigen::Index k = 0; k < spec.magnitudes.size(); ++k) {
    cum += spec.magnitudes[k];
    if (cum >= target) return static_cast<int>(k);
  }
  return static_cast<int>(spec.magnitudes.size() - 1);  // guard against rounding
}

namespace {

struct Moments {
  double mean, sigma;
};

Moments spectral_moments(const FrameSpectrum& spec) {
  const double s = static_cast<double>(spec.magnitudes.size());
  const double mu = spec.magnitudes.mean();
  const double var = (spec.magnitudes.array() - mu).square().sum() / s;
  return {mu, std::sqrt(var)};
}

}  // namespace

double spectral_skewness(const FrameSpectrum& spec) {
  const auto [mu, sigma] = spectral_moments(spec);
  if (!(sigma > 0.0)) throw UndefinedFeatureError("spectral_skewness: constant spectrum");
  return ((spec.magnitudes.array() - mu) / sigma).cube().mean();
}

double spectral_kurtosis(const FrameSpectrum& spec) {
  const auto [mu, sigma] = spectral_moments(spec);
  if (!(sigma > 0.0)) throw UndefinedFeatureError("spectral_kurtosis: constant spectrum");
  return ((spec.magnitudes.array() - mu) / sigma).pow(4).mean() - 3.0;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd mel_filterbank(int n_mels, int n_bins, int window_size, double sample_rate) {
  if (n_mels < 1 || n_bins < 1 || window_size < 2 || sample_rate <= 0.0)
    throw std::invalid_argument("mel_filterbank: invalid arguments");

  // n_mels + 2 equally spaced points on the mel axis, 0 .. Nyquist.
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  Eigen::VectorXd edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(mel_hi * i / (n_mels + 1));

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, n_bins);
  for (int i = 0; i < n_mels; ++i) {
    const double lo = edges[i], peak = edges[i + 1], hi = edges[i + 2];
    for (int b = 0; b < n_bins; ++b) {
      const double f = b * sample_rate / window_size;
      double w = 0.0;
      if (f > lo && f < peak)
        w = (f - lo) / (peak - lo);
      else if (f >= peak && f < hi)
        w = (hi - f) / (hi - peak);
      fb(i, b) = w;
    }
    const double area = fb.row(i).sum();
    if (area > 0.0) fb.row(i) /= area;  // unit weight sum per band
  }
  return fb;
}

namespace {

Eigen::MatrixXd dct2_orthonormal(int n_out, int n_in) {
  Eigen::MatrixXd d(n_out, n_in);
  const double c = std::numbers::pi / n_in;
  for (int k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
    for (int j = 0; j < n_in; ++j) d(k, j) = scale * std::cos(c * k * (j + 0.5));
  }
  return d;
}

Eigen::VectorXd mfcc_with_bank(const FrameSpectrum& spec, const Eigen::MatrixXd& bank,
                               const Eigen::MatrixXd& dct) {
  const Eigen::VectorXd power = spec.magnitudes.array().square();
  const Eigen::VectorXd mel_log =
      ((bank * power).array() + kLogFloor).log10().matrix();
  return dct * mel_log;
}

}  // namespace

Eigen::VectorXd mfcc(const FrameSpectrum& spec, int n_mels, int n_coeffs, double sample_rate) {
  if (n_coeffs < 1 || n_coeffs > n_mels) throw std::invalid_argument("mfcc: need 1 <= n_coeffs <= n_mels");
  spec.validate();
  const auto bank =
      mel_filterbank(n_mels, static_cast<int>(spec.magnitudes.size()), spec.window_size, sample_rate);
  return mfcc_with_bank(spec, bank, dct2_orthonormal(n_coeffs, n_mels));
}

FeatureBundle feature_bundle_from_string(const std::string& name) {
  if (name == "ginna") return FeatureBundle::kGinna;
  if (name == "ginna_shape") return FeatureBundle::kGinnaShape;
  if (name == "spectral") return FeatureBundle::kSpectral;
  if (name == "timbral") return FeatureBundle::kTimbral;
  if (name == "cepstral_mfcc") return FeatureBundle::kCepstralMfcc;
  throw std::invalid_argument("unknown feature bundle: " + name);
}

std::string to_string(FeatureBundle bundle) {
  switch (bundle) {
    case FeatureBundle::kGinna: return "ginna";
    case FeatureBundle::kGinnaShape: return "ginna_shape";
    case FeatureBundle::kSpectral: return "spectral";
    case FeatureBundle::kTimbral: return "timbral";
    case FeatureBundle::kCepstralMfcc: return "cepstral_mfcc";
  }
  throw std::invalid_argument("unknown feature bundle");
}

std::vector<FeatureBundle> all_feature_bundles() {
  return {FeatureBundle::kGinna, FeatureBundle::kGinnaShape, FeatureBundle::kSpectral,
          FeatureBundle::kTimbral, FeatureBundle::kCepstralMfcc};
}

void FeatureVector::validate() const {
  if (static_cast<size_t>(values.size()) != names.size() || names.size() != undefined.size())
    throw std::invalid_argument("FeatureVector: parallel arrays differ in length");
  if (!values.allFinite()) throw std::invalid_argument("FeatureVector: non-finite value");
}

namespace {

// Per-frame stream of one feature, aggregated over the frames where the
// feature was defined. No defined frame -> (0, 0) plus the undefined flag.
struct Stream {
  std::string name;
  std::vector<double> samples;

  void add(std::optional<double> v) {
    if (v) samples.push_back(*v);
  }
  bool empty() const { return samples.empty(); }
  double mean() const {
    double acc = 0.0;
    for (double v : samples) acc += v;
    return acc / static_cast<double>(samples.size());
  }
  double stddev() const {  // population convention
    const double mu = mean();
    double acc = 0.0;
    for (double v : samples) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(samples.size()));
  }
};

template <typename Fn>
std::optional<double> defined(Fn&& fn) {
  try {
    return fn();
  } catch (const UndefinedFeatureError&) {
    return std::nullopt;
  }
}

}  // namespace

FeatureVector feature_bundle(const AudioSignal& clip, FeatureBundle bundle,
                             const StftConfig& frame_cfg) {
  frame_cfg.validate();
  if (clip.sample_rate <= 0 || clip.samples.size() == 0)
    throw std::invalid_argument("feature_bundle: invalid clip");

  const int n = frame_cfg.frame_len;
  const Eigen::Index frames = frame_cfg.num_frames(clip.samples.size());
  if (frames == 0)
    throw std::invalid_argument("feature_bundle: clip shorter than one analysis frame");
  const Eigen::Index hop = frame_cfg.hop();
  const Eigen::VectorXd window = hamming_window<double>(n);

  const bool want_time = bundle == FeatureBundle::kGinna || bundle == FeatureBundle::kGinnaShape ||
                         bundle == FeatureBundle::kTimbral;
  const bool want_shape = bundle == FeatureBundle::kGinnaShape || bundle == FeatureBundle::kSpectral;
  const int n_mfcc = bundle == FeatureBundle::kCepstralMfcc ? 13
                     : bundle == FeatureBundle::kTimbral    ? 5
                                                            : 0;

  Eigen::MatrixXd mel_bank, dct;
  if (n_mfcc > 0) {
    mel_bank = mel_filterbank(26, n / 2, n, clip.sample_rate);
    dct = dct2_orthonormal(n_mfcc, 26);
  }

  Stream s_zcr{"zcr"}, s_ste{"ste"}, s_sc{"centroid_hz"}, s_sr{"rolloff_hz"}, s_sf{"flux"};
  Stream s_std{"spec_std"}, s_skew{"skewness"}, s_kurt{"kurtosis"};
  std::vector<Stream> s_mfcc;
  for (int i = 0; i < n_mfcc; ++i) s_mfcc.push_back({"mfcc" + std::to_string(i), {}});
  std::vector<double> energies;

  Eigen::FFT<double> fft;
  FrameSpectrum prev;
  const Eigen::VectorXd bin_freqs =
      Eigen::VectorXd::LinSpaced(n / 2, 0.0, double(n / 2 - 1)) * (double(clip.sample_rate) / n);

  for (Eigen::Index j = 0; j < frames; ++j) {
    const Eigen::ArrayXd raw = clip.samples.segment(j * hop, n);
    Eigen::VectorXd windowed = raw.matrix().cwiseProduct(window);
    Eigen::VectorXcd dft(n);
    fft.fwd(dft, windowed);

    FrameSpectrum spec;
    spec.magnitudes = dft.head(n / 2).cwiseAbs();
    spec.bin_freqs = bin_freqs;
    spec.window_size = n;

    if (want_time) {
      s_zcr.add(zcr(raw));
      const double e = short_time_energy(raw, window.array());
      s_ste.add(e);
      energies.push_back(e);
    }
    s_sc.add(defined([&] { return spectral_centroid(spec); }));
    s_sr.add(defined([&] {
      return spec.bin_freqs[spectral_rolloff(spec)];
    }));
    if (j > 0) s_sf.add(spectral_flux(prev, spec));
    if (want_shape) {
      s_std.add(defined([&] {
        const double mu = spec.magnitudes.mean();
        return std::sqrt((spec.magnitudes.array() - mu).square().mean());
      }));
      s_skew.add(defined([&] { return spectral_skewness(spec); }));
      s_kurt.add(defined([&] { return spectral_kurtosis(spec); }));
    }
    if (n_mfcc > 0) {
      const Eigen::VectorXd c = mfcc_with_bank(spec, mel_bank, dct);
      for (int i = 0; i < n_mfcc; ++i) s_mfcc[static_cast<size_t>(i)].add(c[i]);
    }
    prev = std::move(spec);
  }

  std::vector<Stream*> streams;
  switch (bundle) {
    case FeatureBundle::kGinna:
      streams = {&s_zcr, &s_ste, &s_sc, &s_sr, &s_sf};
      break;
    case FeatureBundle::kGinnaShape:
      streams = {&s_zcr, &s_ste, &s_sc, &s_sr, &s_sf, &s_std, &s_skew, &s_kurt};
      break;
    case FeatureBundle::kSpectral:
      streams = {&s_sc, &s_sr, &s_sf, &s_skew, &s_kurt};
      break;
    case FeatureBundle::kTimbral:
      streams = {&s_sc, &s_sr, &s_sf, &s_zcr};
      break;
    case FeatureBundle::kCepstralMfcc:
      break;
  }
  if (bundle == FeatureBundle::kTimbral || bundle == FeatureBundle::kCepstralMfcc)
    for (auto& s : s_mfcc) streams.push_back(&s);

  std::vector<double> values;
  std::vector<std::string> names;
  std::vector<uint8_t> flags;
  auto push = [&](const std::string& name, std::optional<double> v) {
    names.push_back(name);
    values.push_back(v.value_or(0.0));
    flags.push_back(v ? 0 : 1);
  };

  for (Stream* s : streams) {
    if (s->empty()) {
      push(s->name + "_mean", std::nullopt);
      push(s->name + "_std", std::nullopt);
    } else {
      push(s->name + "_mean", s->mean());
      push(s->name + "_std", s->stddev());
    }
    // low-energy slots in right after the zcr stats to keep the 19-dim layout
    if (bundle == FeatureBundle::kTimbral && s == &s_zcr) {
      double mu = 0.0;
      for (double e : energies) mu += e;
      mu /= static_cast<double>(energies.size());
      Eigen::Index low = 0;
      for (double e : energies)
        if (e < mu) ++low;
      push("low_energy", static_cast<double>(low) / static_cast<double>(energies.size()));
    }
  }

  FeatureVector out;
  out.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  out.names = std::move(names);
  out.undefined = std::move(flags);
  out.validate();
  return out;
}

void save_feature_csv(const std::string& path, const std::vector<FeatureVector>& rows,
                      const std::vector<std::string>& labels) {
  if (rows.size() != labels.size())
    throw std::invalid_argument("save_feature_csv: rows/labels length mismatch");
  if (rows.empty()) throw std::invalid_argument("save_feature_csv: nothing to write");

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.precision(10);
  for (size_t i = 0; i < rows.front().names.size(); ++i) out << rows.front().names[i] << ',';
  out << "label\n";
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].names != rows.front().names)
      throw std::invalid_argument("save_feature_csv: inconsistent feature names");
    for (Eigen::Index i = 0; i < rows[r].values.size(); ++i) out << rows[r].values[i] << ',';
    out << labels[r] << '\n';
  }
}

}  // namespace terrain
