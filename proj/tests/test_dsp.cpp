#include "terrain/dsp.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace terrain;

namespace {

AudioSignal tone(int rate, double hz, Eigen::Index n, double amp = 1.0) {
  AudioSignal s;
  s.sample_rate = rate;
  s.samples = amp * (2.0 * std::numbers::pi * hz / rate *
                     Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)))
                        .sin();
  return s;
}

}  // namespace

TEST_CASE("hamming window endpoints, symmetry, and midpoint") {
  const Eigen::VectorXd w = hamming_window<double>(11);
  REQUIRE(w.size() == 11);
  CHECK(w[0] == doctest::Approx(0.08));
  CHECK(w[10] == doctest::Approx(0.08));
  CHECK(w[5] == doctest::Approx(1.0));  // cos(pi) -> 0.54 + 0.46
  for (int i = 0; i < 11; ++i) CHECK(w[i] == doctest::Approx(w[10 - i]));
  // spot value against the closed form
  CHECK(w[2] == doctest::Approx(0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * 2.0 / 10.0)));
}

TEST_CASE("stft matches the quadratic-time dft on random frames") {
  std::mt19937_64 rng(99);
  StftConfig cfg;
  cfg.frame_len = 256;
  cfg.overlap_fraction = 0.5;
  cfg.kept_bins = 128;

  AudioSignal sig;
  sig.sample_rate = 8000;
  const Eigen::VectorXd v = oracle::random_vector(256 + 3 * 128, rng);
  sig.samples = v.array();

  const Eigen::MatrixXcd out = stft(sig, cfg);
  REQUIRE(out.rows() == 256);
  REQUIRE(out.cols() == 4);

  const Eigen::VectorXd w = hamming_window<double>(256);
  for (int f = 0; f < 4; ++f) {
    Eigen::VectorXd frame = sig.samples.segment(f * 128, 256).matrix().cwiseProduct(w);
    const Eigen::VectorXcd ref = oracle::dft(frame);
    CHECK(oracle::rel_l2(Eigen::VectorXcd(out.col(f)), ref) < 1e-9);
  }
}

TEST_CASE("frame count arithmetic drops the incomplete tail") {
  StftConfig cfg;  // 2048/1024
  CHECK(cfg.num_frames(8820) == 7);   // 200 ms at 44.1 kHz
  CHECK(cfg.num_frames(2048) == 1);
  CHECK(cfg.num_frames(2047) == 0);
  CHECK(cfg.num_frames(3071) == 1);
  CHECK(cfg.num_frames(3072) == 2);

  cfg.frame_len = 1024;
  cfg.overlap_fraction = 0.5;
  CHECK(cfg.num_frames(8820) == 16);
}

TEST_CASE("log-power spectrogram: floor, tone peak, and metadata") {
  StftConfig cfg;
  cfg.frame_len = 512;
  cfg.overlap_fraction = 0.5;
  cfg.kept_bins = 256;
  const int rate = 8192;

  // silent signal hits the floor exactly
  AudioSignal silent;
  silent.sample_rate = rate;
  silent.samples = Eigen::ArrayXd::Zero(1024);
  const Spectrogram s0 = spectrogram_of(silent, cfg);
  CHECK(s0.values.maxCoeff() == doctest::Approx(20.0 * std::log10(kLogFloor)));
  CHECK(s0.values.minCoeff() == doctest::Approx(-200.0));

  // a bin-centered tone concentrates power in that row
  const double hz = 32.0 * rate / 512.0;  // exactly bin 32
  const Spectrogram s1 = spectrogram_of(tone(rate, hz, 1024), cfg);
  Eigen::Index peak;
  s1.values.col(0).maxCoeff(&peak);
  CHECK(peak == 32);
  CHECK(s1.bin_freqs[32] == doctest::Approx(hz));
  CHECK(s1.values(32, 0) > s1.values(100, 0) + 60.0);  // far sidelobe well down

  REQUIRE(s1.frame_times.size() == 3);
  CHECK(s1.frame_times[0] == doctest::Approx(0.0));
  CHECK(s1.frame_times[1] == doctest::Approx(256.0 / rate));
  CHECK(s1.bin_freqs[0] == doctest::Approx(0.0));
  CHECK(s1.bin_freqs[1] == doctest::Approx(static_cast<double>(rate) / 512.0));
}

TEST_CASE("dataset stats and normalization: divide-first, mean-zero over train set") {
  std::mt19937_64 rng(7);
  std::vector<Spectrogram> specs(5);
  for (auto& s : specs) {
    s.values = 40.0 * oracle::random_matrix(6, 4, rng);
    s.bin_freqs = Eigen::VectorXd::LinSpaced(6, 0.0, 500.0);
    s.frame_times = Eigen::VectorXd::LinSpaced(4, 0.0, 3.0);
  }
  const NormStats stats = dataset_stats(specs);

  double expect_max = 0.0;
  Eigen::MatrixXd expect_mean = Eigen::MatrixXd::Zero(6, 4);
  for (const auto& s : specs) {
    expect_max = std::max(expect_max, s.values.cwiseAbs().maxCoeff());
    expect_mean += s.values;
  }
  expect_mean /= 5.0;
  CHECK(stats.global_max == doctest::Approx(expect_max));
  CHECK((stats.mean_spectrum - expect_mean).cwiseAbs().maxCoeff() < 1e-12);

  // normalized training set re-averages to zero; values bounded by 2
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(6, 4);
  for (const auto& s : specs) {
    const Spectrogram n = normalize_spectrogram(s, stats);
    CHECK(n.values.cwiseAbs().maxCoeff() <= 2.0 + 1e-12);
    acc += n.values;
  }
  CHECK(acc.cwiseAbs().maxCoeff() < 1e-12);

  // divide-first: out = v/gmax - mean/gmax, exactly, element by element
  const Spectrogram n0 = normalize_spectrogram(specs[0], stats);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      const double want =
          specs[0].values(i, j) / stats.global_max - stats.mean_spectrum(i, j) / stats.global_max;
      CHECK(n0.values(i, j) == want);  // bit-exact, not approx
    }
}

TEST_CASE("norm stats file round-trip is exact") {
  std::mt19937_64 rng(11);
  NormStats stats;
  stats.global_max = 87.125;
  stats.mean_spectrum = oracle::random_matrix(5, 3, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "stats.bin").string();
  save_norm_stats(path, stats);
  const NormStats back = load_norm_stats(path);
  CHECK(back.global_max == stats.global_max);
  CHECK((back.mean_spectrum - stats.mean_spectrum).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("augmentation: identity draw returns the input unchanged") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd v = oracle::random_matrix(8, 6, rng);
  AugmentationParams p;  // all neutral
  CHECK((apply_augmentation(v, p) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("augmentation: circular time shift") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd v = oracle::random_matrix(4, 5, rng);
  AugmentationParams p;
  p.time_shift = 2;
  const Eigen::MatrixXd out = apply_augmentation(v, p);
  for (Eigen::Index j = 0; j < 5; ++j)
    CHECK((out.col((j + 2) % 5) - v.col(j)).cwiseAbs().maxCoeff() == 0.0);

  p.time_shift = -1;  // negative shifts wrap the other way
  const Eigen::MatrixXd back = apply_augmentation(v, p);
  CHECK((back.col(4) - v.col(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("augmentation: frequency shift zero-fills vacated rows") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd v = oracle::random_matrix(6, 4, rng);
  AugmentationParams p;
  p.freq_shift = 2;  // rows move up by two, bottom two rows become zero
  const Eigen::MatrixXd out = apply_augmentation(v, p);
  CHECK((out.bottomRows(4) - v.topRows(4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.topRows(2).cwiseAbs().maxCoeff() == 0.0);

  p.freq_shift = -3;
  const Eigen::MatrixXd down = apply_augmentation(v, p);
  CHECK((down.topRows(3) - v.bottomRows(3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(down.bottomRows(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("augmentation: gain adds in the log domain; stretch keeps shape") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd v = oracle::random_matrix(5, 7, rng);
  AugmentationParams p;
  p.gain_db = 6.5;
  CHECK(((apply_augmentation(v, p).array() - v.array()) - 6.5).abs().maxCoeff() < 1e-12);

  p = AugmentationParams{};
  p.stretch = 1.37;
  const Eigen::MatrixXd out = apply_augmentation(v, p);
  CHECK(out.rows() == v.rows());
  CHECK(out.cols() == v.cols());
  // column 0 is a fixed point of the linear re-interpolation
  CHECK((out.col(0) - v.col(0)).cwiseAbs().maxCoeff() < 1e-12);

  // stretch = 1 is the identity
  p.stretch = 1.0;
  CHECK((apply_augmentation(v, p) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampled augmentation respects the configured ranges and is seeded") {
  AugmentationSpec spec;
  spec.time_shift_frames = {-2, 3};
  spec.freq_shift_bins = {-1, 1};
  spec.time_stretch = {0.8, 1.2};
  spec.gain_db = {-4.0, 4.0};

  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 200; ++i) {
    const AugmentationParams p = sample_augmentation(spec, a);
    CHECK(p.time_shift >= -2);
    CHECK(p.time_shift <= 3);
    CHECK(p.freq_shift >= -1);
    CHECK(p.freq_shift <= 1);
    CHECK(p.stretch >= 0.8);
    CHECK(p.stretch <= 1.2);
    CHECK(p.gain_db >= -4.0);
    CHECK(p.gain_db <= 4.0);
    const AugmentationParams q = sample_augmentation(spec, b);
    CHECK(p.time_shift == q.time_shift);
    CHECK(p.stretch == q.stretch);
  }
}

TEST_CASE("spectrogram binary round-trip keeps values to float32 and the bin spacing") {
  std::mt19937_64 rng(12);
  Spectrogram s;
  s.values = 50.0 * oracle::random_matrix(16, 9, rng);
  s.bin_freqs = Eigen::VectorXd::LinSpaced(16, 0.0, 15.0 * 21.533203125);
  s.frame_times = Eigen::VectorXd::LinSpaced(9, 0.0, 8.0 * 0.0232);

  const std::string path =
      (std::filesystem::temp_directory_path() / "clip.tspg").string();
  save_spectrogram(path, s);
  const Spectrogram back = load_spectrogram(path);
  REQUIRE(back.values.rows() == 16);
  REQUIRE(back.values.cols() == 9);
  // payload is float32: round-trip error bounded by single precision
  CHECK((back.values - s.values).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(back.bin_freqs[1] == doctest::Approx(21.533203125));
}

TEST_CASE("stft config validation") {
  StftConfig cfg;
  cfg.frame_len = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = StftConfig{};
  cfg.overlap_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = StftConfig{};
  cfg.kept_bins = 2049;  // more bins than the frame provides
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  StftConfig ok;
  AudioSignal sig;
  sig.sample_rate = 44100;
  sig.samples = Eigen::ArrayXd::Zero(1024);  // shorter than one frame
  CHECK_THROWS_AS(stft(sig, ok), std::invalid_argument);
}
