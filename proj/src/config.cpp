#include "terrain/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace terrain {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument("config: " + where + ": " + what);
}

// Every section walks its keys through one of these so misspelled keys are
// an error instead of silently ignored defaults.
void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
}

template <typename T>
void get_to(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    fail(where, std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T, std::size_t N>
void get_array(const json& j, const std::string& where, const char* key, std::array<T, N>& out) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != N)
    fail(where, std::string("'") + key + "' must be an array of " + std::to_string(N));
  for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<T>();
}

void parse_clip(const json& j, AppConfig& c) {
  check_keys(j, "clip", {"clip_ms", "overlap_ms"});
  get_to(j, "clip", "clip_ms", c.clip.clip_ms);
  get_to(j, "clip", "overlap_ms", c.clip.overlap_ms);
}

void parse_stft(const json& j, AppConfig& c) {
  check_keys(j, "stft", {"frame_len", "overlap_fraction", "kept_bins"});
  get_to(j, "stft", "frame_len", c.stft.frame_len);
  get_to(j, "stft", "overlap_fraction", c.stft.overlap_fraction);
  get_to(j, "stft", "kept_bins", c.stft.kept_bins);
}

void parse_net(const json& j, AppConfig& c) {
  check_keys(j, "net",
             {"variant", "conv_channels", "fc_widths", "lstm_hidden", "dropout", "lstm_window"});
  if (j.contains("variant")) c.net.variant = variant_from_string(j.at("variant").get<std::string>());
  get_array(j, "net", "conv_channels", c.net.conv_channels);
  get_array(j, "net", "fc_widths", c.net.fc_widths);
  get_to(j, "net", "lstm_hidden", c.net.lstm_hidden);
  get_to(j, "net", "dropout", c.net.dropout);
  get_to(j, "net", "lstm_window", c.net.lstm_window);
}

void parse_train(const json& j, AppConfig& c) {
  check_keys(j, "train", {"batch_size", "lr0", "poly_power", "momentum", "max_iters", "seed"});
  get_to(j, "train", "batch_size", c.train.batch_size);
  get_to(j, "train", "lr0", c.train.lr0);
  get_to(j, "train", "poly_power", c.train.poly_power);
  get_to(j, "train", "momentum", c.train.momentum);
  get_to(j, "train", "max_iters", c.train.max_iters);
  get_to(j, "train", "seed", c.train.seed);
}

void parse_augment(const json& j, AppConfig& c) {
  check_keys(j, "augment",
             {"enabled", "ratio", "time_shift_frames", "freq_shift_bins", "time_stretch",
              "gain_db"});
  get_to(j, "augment", "enabled", c.augment.enabled);
  get_to(j, "augment", "ratio", c.augment.ratio);
  get_array(j, "augment", "time_shift_frames", c.augment.spec.time_shift_frames);
  get_array(j, "augment", "freq_shift_bins", c.augment.spec.freq_shift_bins);
  get_array(j, "augment", "time_stretch", c.augment.spec.time_stretch);
  get_array(j, "augment", "gain_db", c.augment.spec.gain_db);
}

void parse_noise(const json& j, AppConfig& c) {
  check_keys(j, "noise",
             {"enabled", "bank_dir", "corrupt_fraction", "snr_mean_db", "snr_std_db",
              "dirichlet_alpha"});
  get_to(j, "noise", "enabled", c.noise.enabled);
  get_to(j, "noise", "bank_dir", c.noise.bank_dir);
  get_to(j, "noise", "corrupt_fraction", c.noise.corrupt_fraction);
  get_to(j, "noise", "snr_mean_db", c.noise.sampler.snr_mean_db);
  get_to(j, "noise", "snr_std_db", c.noise.sampler.snr_std_db);
  if (j.contains("dirichlet_alpha")) {
    const json& a = j.at("dirichlet_alpha");
    if (!a.is_object()) fail("noise", "'dirichlet_alpha' must map category -> alpha");
    for (auto it = a.begin(); it != a.end(); ++it)
      c.noise.sampler.dirichlet_alpha[it.key()] = it.value().get<double>();
  }
}

void parse_synth(const json& j, AppConfig& c) {
  check_keys(j, "synth",
             {"recording_seconds", "recordings_per_class", "train_recordings", "val_recordings",
              "with_noise_bank", "noise_seconds", "noise_recordings", "surfaces"});
  get_to(j, "synth", "recording_seconds", c.synth.corpus.recording_seconds);
  get_to(j, "synth", "recordings_per_class", c.synth.corpus.recordings_per_class);
  get_to(j, "synth", "train_recordings", c.synth.corpus.train_recordings);
  get_to(j, "synth", "val_recordings", c.synth.corpus.val_recordings);
  get_to(j, "synth", "with_noise_bank", c.synth.with_noise_bank);
  get_to(j, "synth", "noise_seconds", c.synth.noise_seconds);
  get_to(j, "synth", "noise_recordings", c.synth.noise_recordings);
  if (j.contains("surfaces")) {
    const json& arr = j.at("surfaces");
    if (!arr.is_array()) fail("synth", "'surfaces' must be an array");
    c.synth.corpus.surfaces.clear();
    for (const json& s : arr) {
      check_keys(s, "synth.surfaces[]", {"label", "band_lo", "band_hi", "line_freqs", "am_rate_hz"});
      SurfaceSpec spec;
      get_to(s, "surface", "label", spec.label);
      get_to(s, "surface", "band_lo", spec.band_lo);
      get_to(s, "surface", "band_hi", spec.band_hi);
      get_to(s, "surface", "line_freqs", spec.line_freqs);
      get_to(s, "surface", "am_rate_hz", spec.am_rate_hz);
      c.synth.corpus.surfaces.push_back(std::move(spec));
    }
  }
}

void parse_experiment(const json& j, AppConfig& c) {
  check_keys(j, "experiment", {"manifest", "out_dir", "eval_split", "checkpoint"});
  get_to(j, "experiment", "manifest", c.experiment.manifest);
  get_to(j, "experiment", "out_dir", c.experiment.out_dir);
  get_to(j, "experiment", "eval_split", c.experiment.eval_split);
  get_to(j, "experiment", "checkpoint", c.experiment.checkpoint);
}

void parse_baseline(const json& j, AppConfig& c) {
  check_keys(j, "baseline",
             {"bundles", "knn_grid", "svm_lambda_grid", "folds", "svm_epochs",
              "standardize_scale"});
  if (j.contains("bundles")) {
    c.baseline.bundles.clear();
    for (const json& b : j.at("bundles"))
      c.baseline.bundles.push_back(feature_bundle_from_string(b.get<std::string>()));
  }
  get_to(j, "baseline", "knn_grid", c.baseline.knn_grid);
  get_to(j, "baseline", "svm_lambda_grid", c.baseline.svm_lambda_grid);
  get_to(j, "baseline", "folds", c.baseline.folds);
  get_to(j, "baseline", "svm_epochs", c.baseline.svm_epochs);
  get_to(j, "baseline", "standardize_scale", c.baseline.standardize_scale);
}

void parse_bench(const json& j, AppConfig& c) {
  check_keys(j, "bench", {"checkpoint", "iterations", "warmup"});
  get_to(j, "bench", "checkpoint", c.bench.checkpoint);
  get_to(j, "bench", "iterations", c.bench.iterations);
  get_to(j, "bench", "warmup", c.bench.warmup);
}

void parse_noise_eval(const json& j, AppConfig& c) {
  check_keys(j, "noise_eval", {"checkpoint", "bank_dir", "snrs"});
  get_to(j, "noise_eval", "checkpoint", c.noise_eval.checkpoint);
  get_to(j, "noise_eval", "bank_dir", c.noise_eval.bank_dir);
  get_to(j, "noise_eval", "snrs", c.noise_eval.snrs);
}

void parse_sweep(const json& j, AppConfig& c) {
  check_keys(j, "sweep", {"clip_ms", "windows"});
  get_to(j, "sweep", "clip_ms", c.sweep.clip_ms);
  get_to(j, "sweep", "windows", c.sweep.windows);
}

}  // namespace

AppConfig parse_app_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
  }
  check_keys(j, "top level",
             {"sample_rate", "clip", "stft", "net", "train", "augment", "noise", "synth",
              "experiment", "baseline", "bench", "noise_eval", "sweep"});

  AppConfig c;
  get_to(j, "top level", "sample_rate", c.sample_rate);
  if (c.sample_rate <= 0) fail("top level", "sample_rate must be positive");
  c.synth.corpus.sample_rate = c.sample_rate;
  if (j.contains("clip")) parse_clip(j.at("clip"), c);
  if (j.contains("stft")) parse_stft(j.at("stft"), c);
  if (j.contains("net")) parse_net(j.at("net"), c);
  if (j.contains("train")) parse_train(j.at("train"), c);
  if (j.contains("augment")) parse_augment(j.at("augment"), c);
  if (j.contains("noise")) parse_noise(j.at("noise"), c);
  if (j.contains("synth")) parse_synth(j.at("synth"), c);
  if (j.contains("experiment")) parse_experiment(j.at("experiment"), c);
  if (j.contains("baseline")) parse_baseline(j.at("baseline"), c);
  if (j.contains("bench")) parse_bench(j.at("bench"), c);
  if (j.contains("noise_eval")) parse_noise_eval(j.at("noise_eval"), c);
  if (j.contains("sweep")) parse_sweep(j.at("sweep"), c);

  c.clip.validate();
  c.stft.validate();
  c.train.validate();
  if (c.augment.enabled) c.augment.spec.validate();
  return c;
}

AppConfig load_app_config(const std::string& path) {
  if (path.empty()) return AppConfig{};
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_app_config(buf.str());
}

}  // namespace terrain
