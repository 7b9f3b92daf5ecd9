#include <doctest.h>

#include "terrain/noise.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace terrain;

namespace {

AudioSignal white(Eigen::Index n, double amp, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, amp);
  AudioSignal s;
  s.sample_rate = 44100;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.samples[i] = g(rng);
  return s;
}

double realized_snr_db(const AudioSignal& clean, const AudioSignal& mixed) {
  const Eigen::ArrayXd added = mixed.samples - clean.samples;
  return 10.0 * std::log10(clean.samples.square().mean() / added.square().mean());
}

NoiseBank tiny_bank(std::mt19937_64& rng) {
  NoiseBank bank;
  bank.categories["hum"] = {white(3000, 0.1, rng), white(2000, 0.2, rng)};
  bank.categories["rain"] = {white(5000, 0.05, rng)};
  bank.categories["wind"] = {white(4000, 0.3, rng), white(4000, 0.08, rng)};
  return bank;
}

}  // namespace

TEST_CASE("mixing at 0 dB adds noise at exactly the clean power") {
  std::mt19937_64 rng(3);
  const AudioSignal clean = white(4000, 0.2, rng);
  const AudioSignal noise = white(6000, 0.7, rng);
  const AudioSignal mixed = mix_noise(clean, noise, 0.0, rng);
  const Eigen::ArrayXd added = mixed.samples - clean.samples;
  const double p_clean = clean.samples.square().mean();
  const double p_added = added.square().mean();
  CHECK(std::abs(p_added / p_clean - 1.0) < 1e-9);
}

TEST_CASE("realized SNR matches the request across the whole range") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> snr_dist(-10.0, 30.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const AudioSignal clean = white(1500, 0.05 + 0.4 * (trial % 7) / 7.0, rng);
    const AudioSignal noise = white(900 + 97 * (trial % 11), 0.02 + 0.3 * (trial % 5) / 5.0, rng);
    const double want = snr_dist(rng);
    const AudioSignal mixed = mix_noise(clean, noise, want, rng);
    CHECK(std::abs(realized_snr_db(clean, mixed) - want) < 1e-6);
  }
}

TEST_CASE("wrapping a short noise recording keeps the SNR exact") {
  std::mt19937_64 rng(7);
  const AudioSignal clean = white(10000, 0.1, rng);
  const AudioSignal noise = white(350, 0.2, rng);  // forces many wraps
  const AudioSignal mixed = mix_noise(clean, noise, 12.5, rng);
  CHECK(std::abs(realized_snr_db(clean, mixed) - 12.5) < 1e-6);
}

TEST_CASE("infinite SNR returns the clean samples untouched") {
  std::mt19937_64 rng(9);
  const AudioSignal clean = white(2000, 0.1, rng);
  const AudioSignal noise = white(2000, 0.1, rng);
  const AudioSignal mixed =
      mix_noise(clean, noise, std::numeric_limits<double>::infinity(), rng);
  REQUIRE(mixed.samples.size() == clean.samples.size());
  for (Eigen::Index i = 0; i < clean.samples.size(); ++i)
    CHECK(mixed.samples[i] == clean.samples[i]);
}

TEST_CASE("mixing rejects degenerate signals") {
  std::mt19937_64 rng(11);
  const AudioSignal clean = white(1000, 0.1, rng);
  const AudioSignal noise = white(1000, 0.1, rng);

  AudioSignal empty;
  empty.sample_rate = 44100;
  CHECK_THROWS_AS(mix_noise(empty, noise, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(mix_noise(clean, empty, 0.0, rng), std::invalid_argument);

  AudioSignal silent;
  silent.sample_rate = 44100;
  silent.samples = Eigen::ArrayXd::Zero(1000);
  CHECK_THROWS_AS(mix_noise(silent, noise, 0.0, rng), std::domain_error);
  CHECK_THROWS_AS(mix_noise(clean, silent, 0.0, rng), std::domain_error);
}

TEST_CASE("noise bank validation") {
  NoiseBank empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

  NoiseBank holey;
  holey.categories["ok"] = {};
  CHECK_THROWS_AS(holey.validate(), std::invalid_argument);

  std::mt19937_64 rng(13);
  CHECK_NOTHROW(tiny_bank(rng).validate());
  CHECK_THROWS_AS(load_noise_bank("/nonexistent/noise/dir"), std::runtime_error);
}

TEST_CASE("sampler mixture is a probability vector every epoch") {
  std::mt19937_64 rng(17);
  const NoiseBank bank = tiny_bank(rng);
  NoiseSampler sampler(bank, NoiseSamplerConfig{});
  for (int epoch = 0; epoch < 50; ++epoch) {
    sampler.begin_epoch(rng);
    const Eigen::VectorXd& m = sampler.mixture();
    REQUIRE(m.size() == 3);
    CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.minCoeff() > 0.0);
  }
}

TEST_CASE("sampler draws are deterministic given the rng seed") {
  std::mt19937_64 bank_rng(19);
  const NoiseBank bank = tiny_bank(bank_rng);
  NoiseSamplerConfig cfg;
  cfg.snr_mean_db = 5.0;
  cfg.snr_std_db = 4.0;

  NoiseSampler a(bank, cfg), b(bank, cfg);
  std::mt19937_64 ra(101), rb(101);
  a.begin_epoch(ra);
  b.begin_epoch(rb);
  for (int i = 0; i < 100; ++i) {
    const auto da = a.sample(ra);
    const auto db = b.sample(rb);
    CHECK(da.category == db.category);
    CHECK(da.snr_db == db.snr_db);
    CHECK(da.noise == db.noise);  // same recording object
  }
}

TEST_CASE("zero SNR spread pins every draw to the mean") {
  std::mt19937_64 rng(23);
  const NoiseBank bank = tiny_bank(rng);
  NoiseSamplerConfig cfg;
  cfg.snr_mean_db = -3.0;
  cfg.snr_std_db = 0.0;
  NoiseSampler sampler(bank, cfg);
  sampler.begin_epoch(rng);
  for (int i = 0; i < 50; ++i) CHECK(sampler.sample(rng).snr_db == -3.0);
}

TEST_CASE("dirichlet concentrations steer the category mixture") {
  std::mt19937_64 rng(29);
  const NoiseBank bank = tiny_bank(rng);
  NoiseSamplerConfig cfg;
  cfg.dirichlet_alpha = {{"hum", 1e4}, {"rain", 1e-4}, {"wind", 1e-4}};
  NoiseSampler sampler(bank, cfg);
  sampler.begin_epoch(rng);
  int hum = 0;
  for (int i = 0; i < 200; ++i) hum += sampler.sample(rng).category == "hum" ? 1 : 0;
  CHECK(hum == 200);

  NoiseSamplerConfig partial;
  partial.dirichlet_alpha = {{"hum", 1.0}};  // misses two categories
  CHECK_THROWS_AS(NoiseSampler(bank, partial), std::invalid_argument);

  NoiseSamplerConfig bad;
  bad.dirichlet_alpha = {{"hum", 0.0}, {"rain", 1.0}, {"wind", 1.0}};
  CHECK_THROWS_AS(NoiseSampler(bank, bad), std::invalid_argument);
}
