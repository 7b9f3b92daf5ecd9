#include "terrain/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

namespace terrain {

namespace {

// Independent deterministic streams derived from one seed. The offsets just
// decorrelate the purposes; reproducibility only needs them to be fixed.
enum class Stream : std::uint64_t {
  kInit = 0x9e3779b97f4a7c15ull,
  kShuffle = 0xbf58476d1ce4e5b9ull,
  kDropout = 0x94d049bb133111ebull,
  kNoise = 0xd6e8feb86659fd93ull,
  kAugment = 0xa5a5a5a5deadbeefull,
};

std::mt19937_64 make_stream(std::uint64_t seed, Stream s) {
  return std::mt19937_64(seed ^ static_cast<std::uint64_t>(s));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index i;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

struct TrainContext {
  const ParamStore* start_params = nullptr;  // finetune entry point
  const NormStats* fixed_stats = nullptr;    // inherit stats instead of recomputing
};

TrainResult train_impl(const Manifest& manifest, const TrainOptions& opts,
                       const TrainContext& ctx) {
  opts.net.validate();
  opts.opt.validate();
  DatasetConfig data_cfg = opts.data;
  data_cfg.window = opts.net.window();
  data_cfg.validate();
  if (opts.noise) {
    if (opts.noise->bank == nullptr) throw std::invalid_argument("noise-aware training without a noise bank");
    opts.noise->bank->validate();
    opts.noise->sampler.validate();
    if (opts.noise->corrupt_fraction < 0.0 || opts.noise->corrupt_fraction > 1.0)
      throw std::invalid_argument("corrupt_fraction must lie in [0, 1]");
  }
  if (opts.augment && (opts.augment->ratio < 0.0 || opts.augment->ratio > 1.0))
    throw std::invalid_argument("augment ratio must lie in [0, 1]");

  const auto labels = manifest.label_set();
  if (static_cast<int>(labels.size()) != opts.net.num_classes)
    throw std::invalid_argument("manifest has " + std::to_string(labels.size()) +
                                " labels but the network expects " +
                                std::to_string(opts.net.num_classes) + " classes");

  const ClipDataset dataset = ClipDataset::load(manifest, "train", labels, data_cfg);
  if (dataset.size() == 0) throw std::invalid_argument("train split yields no windows");
  if (dataset.frames_per_clip() != opts.net.input_frames)
    throw std::invalid_argument("clips produce " + std::to_string(dataset.frames_per_clip()) +
                                " frames but the network expects " +
                                std::to_string(opts.net.input_frames));

  // Class balance warning (training assumes roughly equal support).
  const auto counts = dataset.class_window_counts();
  const auto [lo_it, hi_it] = std::minmax_element(counts.begin(), counts.end());
  if (opts.progress && *lo_it > 0 &&
      static_cast<double>(*hi_it) / static_cast<double>(*lo_it) > 1.25)
    *opts.progress << "warning: class imbalance, window counts range " << *lo_it << ".." << *hi_it
                   << "\n";

  const NormStats stats = ctx.fixed_stats ? *ctx.fixed_stats : dataset.normalization_stats();

  auto init_rng = make_stream(opts.opt.seed, Stream::kInit);
  auto shuffle_rng = make_stream(opts.opt.seed, Stream::kShuffle);
  auto dropout_rng = make_stream(opts.opt.seed, Stream::kDropout);
  auto noise_rng = make_stream(opts.opt.seed, Stream::kNoise);
  auto augment_rng = make_stream(opts.opt.seed, Stream::kAugment);

  ParamStore params = ctx.start_params ? *ctx.start_params : make_params(opts.net, init_rng);
  ParamStore grads = zeros_like(params);
  ParamStore velocity = zeros_like(params);

  std::optional<NoiseSampler> sampler;
  if (opts.noise) sampler.emplace(*opts.noise->bank, opts.noise->sampler);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{std::move(params), {}, {}};
  ForwardTrace trace;
  int iter = 0;
  const int report_every = std::max(1, opts.opt.max_iters / 20);

  while (iter < opts.opt.max_iters) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    if (sampler) sampler->begin_epoch(noise_rng);

    for (std::size_t pos = 0; pos < order.size() && iter < opts.opt.max_iters;
         pos += static_cast<std::size_t>(opts.opt.batch_size)) {
      const std::size_t batch_end =
          std::min(order.size(), pos + static_cast<std::size_t>(opts.opt.batch_size));
      const auto batch_n = static_cast<double>(batch_end - pos);

      for_each_tensor(grads, [](auto& t) { t.setZero(); });
      double batch_loss = 0.0;
      int correct = 0;

      for (std::size_t k = pos; k < batch_end; ++k) {
        const std::size_t w = order[k];
        const int label = dataset.label_of(w);

        bool corrupt = false;
        if (opts.noise && opts.noise->corrupt_fraction > 0.0)
          corrupt = std::bernoulli_distribution(opts.noise->corrupt_fraction)(noise_rng);

        std::vector<Eigen::MatrixXd> window;
        if (corrupt) {
          const auto draw = sampler->sample(noise_rng);
          window = dataset.window_raw_corrupted(w, *draw.noise, draw.snr_db, noise_rng);
        } else {
          window = dataset.window_raw(w);
        }

        if (opts.augment && opts.augment->ratio > 0.0 &&
            std::bernoulli_distribution(opts.augment->ratio)(augment_rng)) {
          // one parameter draw per window keeps the L clips coherent
          const auto aug = sample_augmentation(opts.augment->spec, augment_rng);
          for (auto& v : window) v = apply_augmentation(v, aug);
        }

        ClipDataset::normalize_window(window, stats);
        const auto probs = forward(result.params, window, /*training=*/true, dropout_rng, trace);
        batch_loss += backward(result.params, trace, label, grads);
        if (argmax(probs.back()) == label) ++correct;
      }

      const double inv_n = 1.0 / batch_n;
      for_each_tensor(grads, [&](auto& t) { t *= inv_n; });

      const double mean_loss = batch_loss * inv_n;
      if (!std::isfinite(mean_loss)) {
        throw std::runtime_error("training diverged: non-finite loss at iteration " +
                                 std::to_string(iter) + " (lr " +
                                 format_double(poly_lr(opts.opt, iter)) + ")");
      }

      const double lr = poly_lr(opts.opt, iter);
      sgd_momentum_step(result.params, grads, velocity, lr, opts.opt.momentum);
      result.log.push_back({iter, lr, mean_loss, static_cast<double>(correct) / batch_n});

      if (opts.progress && (iter % report_every == 0 || iter + 1 == opts.opt.max_iters))
        *opts.progress << "iter " << iter << "/" << opts.opt.max_iters << " lr " << lr << " loss "
                       << mean_loss << " acc " << static_cast<double>(correct) / batch_n << "\n";
      ++iter;
    }
  }

  auto& ex = result.extras;
  ex.labels = labels;
  ex.clip = data_cfg.clip;
  ex.stft = data_cfg.stft;
  ex.sample_rate = data_cfg.sample_rate;
  ex.stats = stats;
  ex.metadata["variant"] = to_string(opts.net.variant);
  ex.metadata["seed"] = std::to_string(opts.opt.seed);
  ex.metadata["lr0"] = format_double(opts.opt.lr0);
  ex.metadata["max_iters"] = std::to_string(opts.opt.max_iters);
  ex.metadata["batch_size"] = std::to_string(opts.opt.batch_size);
  ex.metadata["momentum"] = format_double(opts.opt.momentum);
  ex.metadata["poly_power"] = format_double(opts.opt.poly_power);
  ex.metadata["noise_aware"] = opts.noise ? "true" : "false";
  ex.metadata["augmented"] = opts.augment ? "true" : "false";
  return result;
}

}  // namespace

TrainResult train(const Manifest& manifest, const TrainOptions& opts) {
  return train_impl(manifest, opts, {});
}

TrainResult finetune_noise_aware(const Checkpoint& start, const Manifest& manifest,
                                 TrainOptions opts) {
  if (!opts.noise) throw std::invalid_argument("finetune_noise_aware requires a noise bank");
  const auto it = start.extras.metadata.find("lr0");
  if (it == start.extras.metadata.end())
    throw std::invalid_argument("checkpoint records no lr0; cannot derive the fine-tune rate");

  opts.net = start.params.spec;
  opts.data.clip = start.extras.clip;
  opts.data.stft = start.extras.stft;
  opts.data.sample_rate = start.extras.sample_rate;
  opts.data.window = start.params.spec.window();
  opts.opt.lr0 = std::stod(it->second) / 10.0;

  if (manifest.label_set() != start.extras.labels)
    throw std::invalid_argument("manifest label set does not match the checkpoint");

  if (opts.opt.max_iters == 0) {  // degenerate but well-defined: nothing moves
    TrainResult r{start.params, start.extras, {}};
    r.extras.metadata["noise_aware"] = "true";
    return r;
  }

  TrainContext ctx;
  ctx.start_params = &start.params;
  ctx.fixed_stats = &start.extras.stats;
  return train_impl(manifest, opts, ctx);
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "iter,lr,loss,train_acc\n";
  for (const auto& row : log)
    out << row.iter << ',' << format_double(row.lr) << ',' << format_double(row.loss) << ','
        << format_double(row.train_acc) << '\n';
}

Metrics evaluate(const Checkpoint& ckpt, const Manifest& manifest, const std::string& split,
                 const std::optional<EvalCorruption>& corruption) {
  const auto labels = manifest.label_set();
  if (labels != ckpt.extras.labels)
    throw std::invalid_argument("manifest label set does not match the checkpoint");

  DatasetConfig cfg;
  cfg.clip = ckpt.extras.clip;
  cfg.stft = ckpt.extras.stft;
  cfg.sample_rate = ckpt.extras.sample_rate;
  cfg.window = ckpt.params.spec.window();

  const ClipDataset dataset = ClipDataset::load(manifest, split, labels, cfg);
  if (dataset.size() == 0) throw std::invalid_argument("split '" + split + "' yields no windows");

  const std::vector<AudioSignal>* noise_pool = nullptr;
  std::mt19937_64 noise_rng(0);
  bool corrupting = false;
  if (corruption && !(std::isinf(corruption->snr_db) && corruption->snr_db > 0.0)) {
    if (corruption->bank == nullptr) throw std::invalid_argument("evaluate: corruption without a bank");
    const auto it = corruption->bank->categories.find(corruption->category);
    if (it == corruption->bank->categories.end())
      throw std::invalid_argument("unknown noise category '" + corruption->category + "'");
    noise_pool = &it->second;
    noise_rng.seed(corruption->seed);
    corrupting = true;
  }

  ConfusionMatrix cm(labels);
  ForwardTrace trace;
  std::mt19937_64 dummy_rng(0);  // inference mode draws nothing
  for (std::size_t w = 0; w < dataset.size(); ++w) {
    std::vector<Eigen::MatrixXd> window;
    if (corrupting) {
      std::uniform_int_distribution<std::size_t> pick(0, noise_pool->size() - 1);
      const auto& noise = (*noise_pool)[pick(noise_rng)];
      window = dataset.window_raw_corrupted(w, noise, corruption->snr_db, noise_rng);
    } else {
      window = dataset.window_raw(w);
    }
    ClipDataset::normalize_window(window, ckpt.extras.stats);
    const auto probs = forward(ckpt.params, window, /*training=*/false, dummy_rng, trace);
    cm.add(dataset.label_of(w), argmax(probs.back()));
  }
  return compute_metrics(cm);
}

}  // namespace terrain
