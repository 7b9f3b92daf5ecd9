#include "terrain/synth.hpp"

#include "terrain/audio.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <stdexcept>

namespace terrain {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

Eigen::ArrayXd time_axis(Eigen::Index n, int fs) {
  return Eigen::ArrayXd::LinSpaced(n, 0.0, double(n - 1)) / double(fs);
}

// Band noise as a sum of random-phase partials: dense enough to read as a
// noise band in a 2048-point spectrogram, cheap enough to stay vectorized.
Eigen::ArrayXd band_noise(const Eigen::ArrayXd& t, double lo, double hi, std::mt19937_64& rng) {
  constexpr int kPartials = 96;
  std::uniform_real_distribution<double> freq(lo, hi);
  std::uniform_real_distribution<double> phase(0.0, kTau);
  Eigen::ArrayXd x = Eigen::ArrayXd::Zero(t.size());
  const double amp = 1.0 / std::sqrt(double(kPartials));
  for (int p = 0; p < kPartials; ++p) {
    const double f = freq(rng);
    const double ph = phase(rng);
    x += amp * (kTau * f * t + ph).sin();
  }
  return x;
}

double rms(const Eigen::ArrayXd& x) { return std::sqrt(x.square().mean()); }

Eigen::ArrayXd white(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::ArrayXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = g(rng);
  return x;
}

Eigen::ArrayXd render_recording(const SurfaceSpec& s, int fs, Eigen::Index n,
                                std::mt19937_64& rng) {
  const Eigen::ArrayXd t = time_axis(n, fs);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, kTau);

  // per-recording jitter keeps recordings of one class from being clones
  const double band_j = 1.0 + 0.03 * unit(rng);
  Eigen::ArrayXd x = band_noise(t, s.band_lo * band_j, s.band_hi * band_j, rng);
  if (s.band2_hi > 0.0)
    x += band_noise(t, s.band2_lo * band_j, s.band2_hi * band_j, rng);

  for (double f : s.line_freqs) {
    const double fj = f * (1.0 + 0.005 * unit(rng));
    x += 0.5 * (kTau * fj * t + phase(rng)).sin();
  }

  if (s.am_rate_hz > 0.0) {
    const double rate = s.am_rate_hz * (1.0 + 0.08 * unit(rng));
    x *= 1.0 + 0.8 * (kTau * rate * t + phase(rng)).sin();
  }

  const double gain_db = 6.0 * unit(rng);
  x *= 0.15 * std::pow(10.0, gain_db / 20.0) / rms(x);
  // broadband floor plus a steady sub-band rumble: both keep spectrogram
  // cells (the DC bin especially) away from chance nulls, whose log
  // magnitude would otherwise dominate the normalization max
  x += 0.008 * white(n, rng);
  x += 0.065 * (1.0 + 0.15 * unit(rng)) * (kTau * 30.0 * t + phase(rng)).sin();
  return x;
}

void write_signal(const std::string& path, const Eigen::ArrayXd& x, int fs) {
  AudioSignal sig;
  sig.samples = x;
  sig.sample_rate = fs;
  save_wav(path, sig);
}

}  // namespace

// Every class is noise in two wide bands drawn from a six-band palette
// (B0 250-1600, B1 1600-3400, B2 3400-5600, B3 5600-8800, B4 8800-12000,
// B5 12000-15000), plus a harmonic comb and amplitude modulation. Distinct
// band pairs keep most spectrogram bins informative. Three twin pairs stay
// deliberately hard: asphalt/paving and cobblestone/offroad differ only in
// comb fundamental (1480 vs 1512 and 1200 vs 1230 Hz -> line shifts of one
// to four spectrogram bins, resolvable there but smeared together by wide
// mel bands), while the two grass classes differ only in AM rate (0.5 vs
// 3 Hz, needing envelope context across a clip window).
std::vector<SurfaceSpec> default_surface_table() {
  return {
      {"asphalt", 3400, 5600, 8800, 12000, {5920, 7400}, 1.3},   // f0 1480
      {"carpet", 250, 1600, 3400, 5600, {300, 450, 600, 750}, 0.4},
      {"cobblestone", 5600, 8800, 12000, 15000, {13200, 14400}, 4.6},  // f0 1200
      {"grass_high", 1600, 3400, 8800, 12000, {1860, 2480}, 3.0},
      {"grass_mowed", 1600, 3400, 8800, 12000, {1860, 2480}, 0.5},  // same comb, slower AM
      {"linoleum", 250, 1600, 5600, 8800, {1140, 1520, 1900, 2280}, 0.6},
      {"offroad", 5600, 8800, 12000, 15000, {13530, 14760}, 4.6},  // f0 1230
      {"paving", 3400, 5600, 8800, 12000, {6048, 7560}, 1.3},   // f0 1512, one bin up
      {"wood", 1600, 3400, 5600, 8800, {3280, 4100, 4920}, 1.4},
  };
}

void SynthConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("synth: sample_rate must be positive");
  if (recording_seconds <= 0.0)
    throw std::invalid_argument("synth: recording_seconds must be positive");
  if (recordings_per_class <= 0)
    throw std::invalid_argument("synth: recordings_per_class must be positive");
  if (train_recordings <= 0 || val_recordings <= 0 ||
      train_recordings + val_recordings >= recordings_per_class)
    throw std::invalid_argument("synth: split sizes must leave room for a test split");
  for (const SurfaceSpec& s : surfaces) {
    if (s.label.empty()) throw std::invalid_argument("synth: surface with empty label");
    if (!(s.band_lo > 0.0) || !(s.band_hi > s.band_lo) ||
        s.band_hi >= 0.5 * double(sample_rate))
      throw std::invalid_argument("synth: bad band for surface " + s.label);
    if (s.band2_hi != 0.0 &&
        (!(s.band2_lo > 0.0) || !(s.band2_hi > s.band2_lo) ||
         s.band2_hi >= 0.5 * double(sample_rate)))
      throw std::invalid_argument("synth: bad second band for surface " + s.label);
  }
}

Manifest synthesize_corpus(const std::string& out_dir, const SynthConfig& cfg) {
  SynthConfig c = cfg;
  if (c.surfaces.empty()) c.surfaces = default_surface_table();
  c.validate();

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");

  const Eigen::Index n =
      static_cast<Eigen::Index>(std::llround(c.recording_seconds * c.sample_rate));
  Manifest m;
  m.base_dir = out_dir;

  for (std::size_t ci = 0; ci < c.surfaces.size(); ++ci) {
    const SurfaceSpec& s = c.surfaces[ci];
    for (int r = 0; r < c.recordings_per_class; ++r) {
      // stream per (class, recording): output is order-independent
      std::mt19937_64 rng(c.seed ^ (0x51ed2701a9b4e2d5ull * (ci + 1)) ^
                          (0xc2b2ae3d27d4eb4full * std::uint64_t(r + 1)));
      const Eigen::ArrayXd x = render_recording(s, c.sample_rate, n, rng);

      char name[128];
      std::snprintf(name, sizeof(name), "wav/%s_%02d.wav", s.label.c_str(), r);
      write_signal((fs::path(out_dir) / name).string(), x, c.sample_rate);

      ManifestEntry e;
      e.path = name;
      e.label = s.label;
      e.split = r < c.train_recordings                     ? "train"
                : r < c.train_recordings + c.val_recordings ? "val"
                                                             : "test";
      char loc[32];
      std::snprintf(loc, sizeof(loc), "r%02d", r);
      e.location = loc;
      m.entries.push_back(e);
    }
  }

  save_manifest((fs::path(out_dir) / "manifest.csv").string(), m);
  return m;
}

void synthesize_noise_bank(const std::string& out_dir, int sample_rate, double seconds,
                           int recordings_per_category, std::uint64_t seed) {
  if (sample_rate <= 0 || seconds <= 0.0 || recordings_per_category <= 0)
    throw std::invalid_argument("noise bank: sizes must be positive");

  namespace fs = std::filesystem;
  const Eigen::Index n = static_cast<Eigen::Index>(std::llround(seconds * sample_rate));
  const Eigen::ArrayXd t = time_axis(n, sample_rate);
  const std::vector<std::string> categories = {"white", "pink", "hum", "chirp", "babble"};

  for (std::size_t ci = 0; ci < categories.size(); ++ci) {
    const std::string& cat = categories[ci];
    fs::create_directories(fs::path(out_dir) / cat);
    for (int r = 0; r < recordings_per_category; ++r) {
      std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (ci + 1)) ^
                          (0xd6e8feb86659fd93ull * std::uint64_t(r + 1)));
      std::uniform_real_distribution<double> phase(0.0, kTau);
      Eigen::ArrayXd x;

      if (cat == "white") {
        x = white(n, rng);
      } else if (cat == "pink") {
        // three-pole approximation of a 1/f slope
        const Eigen::ArrayXd w = white(n, rng);
        x.resize(n);
        double b0 = 0.0, b1 = 0.0, b2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          b0 = 0.99765 * b0 + w[i] * 0.0990460;
          b1 = 0.96300 * b1 + w[i] * 0.2965164;
          b2 = 0.57000 * b2 + w[i] * 1.0526913;
          x[i] = b0 + b1 + b2 + w[i] * 0.1848;
        }
      } else if (cat == "hum") {
        x = Eigen::ArrayXd::Zero(n);
        const double amps[] = {1.0, 0.5, 0.35, 0.25};
        for (int h = 0; h < 4; ++h)
          x += amps[h] * (kTau * 50.0 * (h + 1) * t + phase(rng)).sin();
        x += 0.05 * white(n, rng);
      } else if (cat == "chirp") {
        // repeating 0.5 s linear sweep
        const double period = 0.5, f0 = 200.0, f1 = 8000.0;
        const double ph0 = phase(rng);
        x.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double tp = std::fmod(t[i], period);
          x[i] = std::sin(ph0 + kTau * (f0 * tp + 0.5 * (f1 - f0) * tp * tp / period));
        }
        x += 0.05 * white(n, rng);
      } else {  // babble: a crowd of slowly gated tones
        x = Eigen::ArrayXd::Zero(n);
        std::uniform_real_distribution<double> voice(300.0, 3400.0);
        std::uniform_real_distribution<double> rate(2.0, 8.0);
        for (int v = 0; v < 12; ++v) {
          const Eigen::ArrayXd carrier = (kTau * voice(rng) * t + phase(rng)).sin();
          const Eigen::ArrayXd gate = (kTau * rate(rng) * t + phase(rng)).sin().abs();
          x += carrier * gate;
        }
      }

      x *= 0.1 / rms(x);
      char name[128];
      std::snprintf(name, sizeof(name), "%s/%s_%02d.wav", cat.c_str(), cat.c_str(), r);
      write_signal((fs::path(out_dir) / name).string(), x, sample_rate);
    }
  }
}

}  // namespace terrain
