#include "terrain/model.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace terrain {

using json = nlohmann::json;

Variant variant_from_string(const std::string& name) {
  if (name == "M1") return Variant::kM1;
  if (name == "M2") return Variant::kM2;
  if (name == "M3") return Variant::kM3;
  if (name == "M4") return Variant::kM4;
  throw std::invalid_argument("unknown model variant: " + name);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kM1: return "M1";
    case Variant::kM2: return "M2";
    case Variant::kM3: return "M3";
    case Variant::kM4: return "M4";
  }
  throw std::invalid_argument("unknown model variant");
}

int NetworkSpec::pooled_frames() const {
  int t = input_frames;
  for (int i = 0; i < 3; ++i) t = (t + 1) / 2;
  return t;
}

int NetworkSpec::fc_input() const {
  return has_gsp() ? 3 * conv_channels[2] : conv_channels[2] * pooled_frames();
}

void NetworkSpec::validate() const {
  if (input_bins < 1 || input_frames < 1) throw std::invalid_argument("NetworkSpec: empty input shape");
  for (int c : conv_channels)
    if (c < 1) throw std::invalid_argument("NetworkSpec: conv channels must be positive");
  for (int f : fc_widths)
    if (f < 1) throw std::invalid_argument("NetworkSpec: fc widths must be positive");
  if (num_classes < 2) throw std::invalid_argument("NetworkSpec: need at least 2 classes");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("NetworkSpec: dropout in [0,1)");
  if (has_lstm()) {
    if (lstm_hidden < 1) throw std::invalid_argument("NetworkSpec: lstm_hidden must be positive");
    if (lstm_window < 1) throw std::invalid_argument("NetworkSpec: lstm_window must be >= 1");
  } else if (lstm_window != 1) {
    throw std::invalid_argument("NetworkSpec: M1/M2 use a window of exactly 1 clip");
  }
}

ParamStore make_params(const NetworkSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  ParamStore p;
  p.spec = spec;

  auto conv = [&](int out, int in) {
    Conv3Params<double> c;
    for (auto& w : c.w) w = xavier_uniform<double>(out, in, 3 * in, rng);
    c.b = Vec<double>::Zero(out);
    return c;
  };
  auto dense = [&](int out, int in) {
    DenseParams<double> d;
    d.w = xavier_uniform<double>(out, in, in, rng);
    d.b = Vec<double>::Zero(out);
    return d;
  };

  int in_ch = spec.input_bins;
  for (int b = 0; b < 3; ++b) {
    const int ch = spec.conv_channels[static_cast<size_t>(b)];
    p.convs.push_back(conv(ch, in_ch));
    p.cccps.push_back(dense(ch, ch));
    p.convs.push_back(conv(ch, ch));
    p.cccps.push_back(dense(ch, ch));
    in_ch = ch;
  }

  int v = spec.fc_input();
  for (int i = 0; i < 3; ++i) {
    p.fcs[static_cast<size_t>(i)] = dense(spec.fc_widths[static_cast<size_t>(i)], v);
    v = spec.fc_widths[static_cast<size_t>(i)];
  }

  if (spec.has_lstm()) {
    const int h = spec.lstm_hidden, in = spec.fc_widths[2];
    auto wx = [&] { return xavier_uniform<double>(h, in, in, rng); };
    auto wh = [&] { return xavier_uniform<double>(h, h, h, rng); };
    auto& l = p.lstm;
    l.wxi = wx(); l.whi = wh(); l.bi = Vec<double>::Zero(h);
    l.wxf = wx(); l.whf = wh(); l.bf = Vec<double>::Zero(h);
    l.wxo = wx(); l.who = wh(); l.bo = Vec<double>::Zero(h);
    l.wxc = wx(); l.whc = wh(); l.bc = Vec<double>::Zero(h);
  }

  p.head = dense(spec.num_classes, spec.head_input());
  return p;
}

ParamStore zeros_like(const ParamStore& p) {
  ParamStore z = p;
  for_each_tensor(z, [](auto& t) { t.setZero(); });
  return z;
}

std::vector<TensorSpan> tensor_spans(ParamStore& p) {
  std::vector<TensorSpan> spans;
  for_each_tensor(p, [&](auto& t) { spans.push_back({t.data(), t.size()}); });
  return spans;
}

std::vector<ConstTensorSpan> tensor_spans(const ParamStore& p) {
  std::vector<ConstTensorSpan> spans;
  for_each_tensor(const_cast<ParamStore&>(p),
                  [&](const auto& t) { spans.push_back({t.data(), t.size()}); });
  return spans;
}

std::size_t param_count(const NetworkSpec& spec) {
  spec.validate();
  std::size_t n = 0;
  std::size_t in = static_cast<std::size_t>(spec.input_bins);
  for (int b = 0; b < 3; ++b) {
    const auto ch = static_cast<std::size_t>(spec.conv_channels[static_cast<size_t>(b)]);
    n += 3 * ch * in + ch;   // conv A
    n += ch * ch + ch;       // cccp A
    n += 3 * ch * ch + ch;   // conv B
    n += ch * ch + ch;       // cccp B
    in = ch;
  }
  std::size_t v = static_cast<std::size_t>(spec.fc_input());
  for (int i = 0; i < 3; ++i) {
    const auto f = static_cast<std::size_t>(spec.fc_widths[static_cast<size_t>(i)]);
    n += f * v + f;
    v = f;
  }
  if (spec.has_lstm()) {
    const auto h = static_cast<std::size_t>(spec.lstm_hidden);
    n += 4 * (h * v + h * h + h);
  }
  n += static_cast<std::size_t>(spec.num_classes) * static_cast<std::size_t>(spec.head_input()) +
       static_cast<std::size_t>(spec.num_classes);
  return n;
}

// ---------------------------------------------------------------------------

Vec<double> clip_forward(const ParamStore& p, const Mat<double>& x, bool training,
                         std::mt19937_64& rng, ClipTrace& tr) {
  const auto& spec = p.spec;
  if (x.rows() != spec.input_bins || x.cols() != spec.input_frames)
    throw std::invalid_argument("clip_forward: spectrogram shape " + std::to_string(x.rows()) +
                                "x" + std::to_string(x.cols()) + " does not match network input " +
                                std::to_string(spec.input_bins) + "x" +
                                std::to_string(spec.input_frames));

  Mat<double> cur = x;
  for (size_t b = 0; b < 3; ++b) {
    for (size_t half = 0; half < 2; ++half) {
      const size_t i = 2 * b + half;
      tr.conv_in[i] = cur;
      tr.conv_pre[i] = conv3_forward(p.convs[i], cur);
      cur = relu<double>(tr.conv_pre[i]);
      tr.cccp_in[i] = cur;
      tr.cccp_pre[i] = cccp_forward(p.cccps[i], cur);
      cur = relu<double>(tr.cccp_pre[i]);
    }
    tr.pool_in[b] = cur;
    cur = maxpool2_forward(cur, tr.pool_argmax[b]);
  }
  tr.cnn_out = cur;

  Vec<double> v;
  if (spec.has_gsp())
    v = gsp_forward(cur, tr.gsp);
  else
    v = Eigen::Map<const Vec<double>>(cur.data(), cur.size());

  const auto rate = spec.dropout;
  for (size_t i = 0; i < 3; ++i) {
    tr.fc_in[i] = v;
    tr.fc_pre[i] = fc_forward(p.fcs[i], v);
    v = relu<double>(tr.fc_pre[i]);
    v = dropout_forward<double>(v, rate, training, rng, tr.drop_mask[i]);
  }
  tr.z = v;
  return v;
}

namespace {

// Mirror of clip_forward; dz is the gradient at the clip embedding.
void clip_backward(const ParamStore& p, const ClipTrace& tr, Vec<double> dz, ParamStore& g) {
  for (size_t i = 3; i-- > 0;) {
    dz = dropout_backward(tr.drop_mask[i], dz);
    dz = relu_backward(tr.fc_pre[i], dz);
    Vec<double> dx;
    fc_backward(p.fcs[i], tr.fc_in[i], dz, g.fcs[i], dx);
    dz = std::move(dx);
  }

  Mat<double> dcur;
  if (p.spec.has_gsp())
    dcur = gsp_backward(tr.cnn_out, tr.gsp, dz);
  else
    dcur = Eigen::Map<const Mat<double>>(dz.data(), tr.cnn_out.rows(), tr.cnn_out.cols());

  for (size_t b = 3; b-- > 0;) {
    dcur = maxpool2_backward(tr.pool_argmax[b], dcur, tr.pool_in[b].cols());
    for (size_t half = 2; half-- > 0;) {
      const size_t i = 2 * b + half;
      dcur = relu_backward(tr.cccp_pre[i], dcur);
      Mat<double> dtmp;
      cccp_backward(p.cccps[i], tr.cccp_in[i], dcur, g.cccps[i], dtmp);
      dcur = relu_backward(tr.conv_pre[i], dtmp);
      conv3_backward(p.convs[i], tr.conv_in[i], dcur, g.convs[i], dtmp);
      dcur = std::move(dtmp);
    }
  }
}

}  // namespace

std::vector<Vec<double>> forward(const ParamStore& p, const std::vector<Mat<double>>& window,
                                 bool training, std::mt19937_64& rng, ForwardTrace& tr) {
  const auto& spec = p.spec;
  const auto want = static_cast<size_t>(spec.window());
  if (window.size() != want)
    throw std::invalid_argument("forward: window of " + std::to_string(window.size()) +
                                " clips, expected " + std::to_string(want) + " for " +
                                to_string(spec.variant));

  tr.clips.assign(window.size(), ClipTrace{});
  tr.lstm_steps.clear();
  tr.head_in.clear();
  tr.logits.clear();
  tr.probs.clear();

  LstmState<double> state;
  if (spec.has_lstm()) state = lstm_zero_state<double>(spec.lstm_hidden);

  for (size_t l = 0; l < window.size(); ++l) {
    Vec<double> z = clip_forward(p, window[l], training, rng, tr.clips[l]);
    if (spec.has_lstm()) {
      tr.lstm_steps.emplace_back();
      state = lstm_step_forward(p.lstm, z, state, tr.lstm_steps.back());
      tr.head_in.push_back(state.h);
    } else {
      tr.head_in.push_back(std::move(z));
    }
    tr.logits.push_back(fc_forward(p.head, tr.head_in.back()));
    tr.probs.push_back(softmax(tr.logits.back()));
  }
  return tr.probs;
}

double backward(const ParamStore& p, const ForwardTrace& tr, int label, ParamStore& grads) {
  if (tr.clips.empty() || tr.logits.size() != tr.clips.size())
    throw std::logic_error("backward: forward trace missing or incomplete");
  if (label < 0 || label >= p.spec.num_classes)
    throw std::invalid_argument("backward: label out of range");
  const size_t last = tr.clips.size() - 1;

  Vec<double> probs;
  const double loss = softmax_cross_entropy(tr.logits[last], label, probs);
  Vec<double> dlogits = softmax_cross_entropy_backward(probs, label);

  Vec<double> dhead_in;
  fc_backward(p.head, tr.head_in[last], dlogits, grads.head, dhead_in);

  if (p.spec.has_lstm()) {
    if (tr.lstm_steps.size() != tr.clips.size())
      throw std::logic_error("backward: lstm cache missing");
    Vec<double> dh = dhead_in;
    Vec<double> dc = Vec<double>::Zero(p.spec.lstm_hidden);
    for (size_t l = tr.clips.size(); l-- > 0;) {
      Vec<double> dz = lstm_step_backward(p.lstm, tr.lstm_steps[l], dh, dc, grads.lstm);
      clip_backward(p, tr.clips[l], std::move(dz), grads);
    }
  } else {
    clip_backward(p, tr.clips[0], std::move(dhead_in), grads);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// checkpoint io

namespace {

constexpr uint32_t kCheckpointVersion = 1;

void put_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_i32(std::ofstream& out, int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ofstream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t get_u32(std::ifstream& in) {
  uint32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
int32_t get_i32(std::ifstream& in) {
  int32_t v;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
double get_f64(std::ifstream& in) {
  double v;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

json spec_to_json(const NetworkSpec& s) {
  return json{{"variant", to_string(s.variant)},
              {"input_bins", s.input_bins},
              {"input_frames", s.input_frames},
              {"conv_channels", s.conv_channels},
              {"fc_widths", s.fc_widths},
              {"lstm_hidden", s.lstm_hidden},
              {"dropout", s.dropout},
              {"num_classes", s.num_classes},
              {"lstm_window", s.lstm_window}};
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const CheckpointExtras& extras) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  const auto& s = params.spec;
  out.write("TNET", 4);
  put_u32(out, kCheckpointVersion);
  put_i32(out, static_cast<int32_t>(s.variant));
  put_i32(out, s.input_bins);
  put_i32(out, s.input_frames);
  for (int c : s.conv_channels) put_i32(out, c);
  for (int f : s.fc_widths) put_i32(out, f);
  put_i32(out, s.lstm_hidden);
  put_f64(out, s.dropout);
  put_i32(out, s.num_classes);
  put_i32(out, s.lstm_window);

  // Raw float64 payloads, declaration order, column-major within a tensor.
  for (const auto& span : tensor_spans(params))
    out.write(reinterpret_cast<const char*>(span.data),
              static_cast<std::streamsize>(span.size * 8));
  if (!out) throw std::runtime_error("short write: " + path);
  out.close();

  json side;
  side["format"] = "TNET";
  side["version"] = kCheckpointVersion;
  side["spec"] = spec_to_json(s);
  side["labels"] = extras.labels;
  side["clip"] = {{"clip_ms", extras.clip.clip_ms}, {"overlap_ms", extras.clip.overlap_ms}};
  side["stft"] = {{"frame_len", extras.stft.frame_len},
                  {"overlap_fraction", extras.stft.overlap_fraction},
                  {"kept_bins", extras.stft.kept_bins}};
  side["sample_rate"] = extras.sample_rate;
  side["param_count"] = param_count(s);
  json stats;
  stats["global_max"] = extras.stats.global_max;
  stats["rows"] = extras.stats.mean_spectrum.rows();
  stats["cols"] = extras.stats.mean_spectrum.cols();
  std::vector<double> flat(extras.stats.mean_spectrum.data(),
                           extras.stats.mean_spectrum.data() + extras.stats.mean_spectrum.size());
  stats["mean_spectrum"] = flat;  // column-major
  side["norm_stats"] = stats;
  side["metadata"] = extras.metadata;

  std::ofstream js(path + ".json");
  if (!js) throw std::runtime_error("cannot open for writing: " + path + ".json");
  js << side.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TNET", 4) != 0)
    throw std::runtime_error("bad checkpoint magic in " + path);
  const uint32_t version = get_u32(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  NetworkSpec s;
  s.variant = static_cast<Variant>(get_i32(in));
  s.input_bins = get_i32(in);
  s.input_frames = get_i32(in);
  for (auto& c : s.conv_channels) c = get_i32(in);
  for (auto& f : s.fc_widths) f = get_i32(in);
  s.lstm_hidden = get_i32(in);
  s.dropout = get_f64(in);
  s.num_classes = get_i32(in);
  s.lstm_window = get_i32(in);
  if (!in) throw std::runtime_error("truncated checkpoint header in " + path);
  s.validate();

  Checkpoint ckpt;
  std::mt19937_64 rng(0);
  ckpt.params = make_params(s, rng);  // shapes; contents overwritten below
  for (const auto& span : tensor_spans(ckpt.params)) {
    in.read(reinterpret_cast<char*>(span.data), static_cast<std::streamsize>(span.size * 8));
    if (!in) throw std::runtime_error("truncated checkpoint payload in " + path);
  }

  std::ifstream js(path + ".json");
  if (!js) throw std::runtime_error("missing checkpoint sidecar: " + path + ".json");
  json side = json::parse(js);
  auto& ex = ckpt.extras;
  ex.labels = side.at("labels").get<std::vector<std::string>>();
  ex.clip.clip_ms = side.at("clip").at("clip_ms").get<double>();
  ex.clip.overlap_ms = side.at("clip").at("overlap_ms").get<double>();
  ex.stft.frame_len = side.at("stft").at("frame_len").get<int>();
  ex.stft.overlap_fraction = side.at("stft").at("overlap_fraction").get<double>();
  ex.stft.kept_bins = side.at("stft").at("kept_bins").get<int>();
  ex.sample_rate = side.at("sample_rate").get<int>();
  const auto& st = side.at("norm_stats");
  ex.stats.global_max = st.at("global_max").get<double>();
  const auto rows = st.at("rows").get<Eigen::Index>();
  const auto cols = st.at("cols").get<Eigen::Index>();
  const auto flat = st.at("mean_spectrum").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw std::runtime_error("norm stats size mismatch in sidecar of " + path);
  ex.stats.mean_spectrum = Eigen::Map<const Eigen::MatrixXd>(flat.data(), rows, cols);
  if (side.contains("metadata"))
    ex.metadata = side.at("metadata").get<std::map<std::string, std::string>>();

  if (static_cast<int>(ex.labels.size()) != s.num_classes)
    throw std::runtime_error("label list does not match class count in " + path);
  return ckpt;
}

// ---------------------------------------------------------------------------

InferenceEngine::InferenceEngine(ParamStore params, CheckpointExtras extras)
    : params_(std::move(params)), extras_(std::move(extras)), rng_(0) {
  reset();
}

InferenceEngine::InferenceEngine(Checkpoint ckpt)
    : InferenceEngine(std::move(ckpt.params), std::move(ckpt.extras)) {}

void InferenceEngine::reset() {
  if (params_.spec.has_lstm()) state_ = lstm_zero_state<double>(params_.spec.lstm_hidden);
}

Eigen::VectorXd InferenceEngine::step(const AudioSignal& clip) {
  const Spectrogram spec = spectrogram_of(clip, extras_.stft);
  const Spectrogram norm = normalize_spectrogram(spec, extras_.stats);
  Vec<double> z = clip_forward(params_, norm.values, /*training=*/false, rng_, scratch_);
  if (params_.spec.has_lstm()) {
    LstmStepCache<double> cache;
    state_ = lstm_step_forward(params_.lstm, z, state_, cache);
    z = state_.h;
  }
  return softmax(fc_forward(params_.head, z).eval());
}

}  // namespace terrain
