#pragma once

#include "terrain/audio.hpp"
#include "terrain/dsp.hpp"
#include "terrain/layers.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace terrain {

/// M1: CNN + flatten. M2: CNN + global statistical pooling.
/// M3/M4: M1/M2 plus an LSTM over a window of consecutive clips.
enum class Variant { kM1, kM2, kM3, kM4 };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

struct NetworkSpec {
  Variant variant = Variant::kM4;
  int input_bins = 512;   // frequency bins act as input channels
  int input_frames = 7;   // time frames per clip
  std::array<int, 3> conv_channels{64, 128, 256};
  std::array<int, 3> fc_widths{512, 256, 128};
  int lstm_hidden = 128;
  double dropout = 0.5;
  int num_classes = 9;
  int lstm_window = 5;  // clips per sequence; forced to 1 for M1/M2

  bool has_gsp() const { return variant == Variant::kM2 || variant == Variant::kM4; }
  bool has_lstm() const { return variant == Variant::kM3 || variant == Variant::kM4; }
  /// Frames left after the three ceil-mode halvings (7 -> 4 -> 2 -> 1).
  int pooled_frames() const;
  /// Width of the first FC input: 3*C for GSP, C*pooled_frames for flatten.
  int fc_input() const;
  int head_input() const { return has_lstm() ? lstm_hidden : fc_widths[2]; }
  int window() const { return has_lstm() ? lstm_window : 1; }
  void validate() const;
};

/// All learnable tensors, laid out in network order. The declaration order
/// below is the serialization order of the checkpoint format and of
/// for_each_tensor.
struct ParamStore {
  NetworkSpec spec;
  std::vector<Conv3Params<double>> convs;  // 6: two per block
  std::vector<DenseParams<double>> cccps;  // 6: one after each conv
  std::array<DenseParams<double>, 3> fcs;
  LstmParams<double> lstm;  // zero-sized for M1/M2
  DenseParams<double> head;
};

/// Xavier-uniform weights (a = sqrt(3/n_in), fan-in counts kernel taps),
/// zero biases. Draw order is fixed, so a seed pins every tensor.
ParamStore make_params(const NetworkSpec& spec, std::mt19937_64& rng);

/// Same shapes, all zeros — gradient and velocity stores.
ParamStore zeros_like(const ParamStore& p);

/// Visits every tensor in declaration order. F is a generic callable
/// accepting Eigen matrix/vector lvalues.
template <typename Store, typename F>
void for_each_tensor(Store&& p, F&& f) {
  for (auto& c : p.convs) {
    f(c.w[0]);
    f(c.w[1]);
    f(c.w[2]);
    f(c.b);
  }
  for (auto& c : p.cccps) {
    f(c.w);
    f(c.b);
  }
  for (auto& fc : p.fcs) {
    f(fc.w);
    f(fc.b);
  }
  auto& l = p.lstm;
  for (auto* m : {&l.wxi, &l.whi}) f(*m);
  f(l.bi);
  for (auto* m : {&l.wxf, &l.whf}) f(*m);
  f(l.bf);
  for (auto* m : {&l.wxo, &l.who}) f(*m);
  f(l.bo);
  for (auto* m : {&l.wxc, &l.whc}) f(*m);
  f(l.bc);
  f(p.head.w);
  f(p.head.b);
}

struct TensorSpan {
  double* data;
  Eigen::Index size;
};
struct ConstTensorSpan {
  const double* data;
  Eigen::Index size;
};

/// Flat views of every tensor, in declaration order.
std::vector<TensorSpan> tensor_spans(ParamStore& p);
std::vector<ConstTensorSpan> tensor_spans(const ParamStore& p);

/// Total learnable scalars. Closed form (C0 = input_bins, Cb = conv_channels,
/// F = fc_widths, H = lstm_hidden, K = num_classes, P = pooled frames):
///   sum over blocks b of  3*Cb*C_{b-1} + Cb  (conv A)
///                        + Cb*Cb + Cb        (cccp A)
///                        + 3*Cb*Cb + Cb      (conv B)
///                        + Cb*Cb + Cb        (cccp B)
///   + F1*fc_in + F1 + F2*F1 + F2 + F3*F2 + F3     fc_in = 3*C3 or C3*P
///   + [lstm] 4*(H*F3 + H*H + H)
///   + K*head_in + K                                head_in = H or F3
std::size_t param_count(const NetworkSpec& spec);

// ---------------------------------------------------------------------------
// forward / backward

/// Everything backward needs: per-layer inputs, pre-activations, pooling
/// argmaxes, dropout masks, LSTM gate caches, and the head outputs.
struct ClipTrace {
  std::array<Mat<double>, 6> conv_in, conv_pre;
  std::array<Mat<double>, 6> cccp_in, cccp_pre;
  std::array<Mat<double>, 3> pool_in;
  std::array<Eigen::MatrixX<Eigen::Index>, 3> pool_argmax;
  Mat<double> cnn_out;
  GspCache<double> gsp;
  std::array<Vec<double>, 3> fc_in, fc_pre, drop_mask;
  Vec<double> z;  // clip embedding fed to the LSTM / head
};

struct ForwardTrace {
  std::vector<ClipTrace> clips;
  std::vector<LstmStepCache<double>> lstm_steps;
  std::vector<Vec<double>> head_in;  // h_t (M3/M4) or z (M1/M2)
  std::vector<Vec<double>> logits;
  std::vector<Vec<double>> probs;
};

/// Embeds one clip through the conv/cccp/pool blocks and the FC stack.
Vec<double> clip_forward(const ParamStore& p, const Mat<double>& x, bool training,
                         std::mt19937_64& rng, ClipTrace& trace);

/// Runs a window of L normalized spectrograms (matrices bins x frames)
/// through the full network. L must equal spec.window(). Returns one
/// probability vector per step (M1/M2: exactly one).
std::vector<Vec<double>> forward(const ParamStore& p, const std::vector<Mat<double>>& window,
                                 bool training, std::mt19937_64& rng, ForwardTrace& trace);

/// Cross-entropy loss on the *last* step's prediction; accumulates gradients
/// for every parameter into `grads` (+=). Returns the loss.
double backward(const ParamStore& p, const ForwardTrace& trace, int label, ParamStore& grads);

// ---------------------------------------------------------------------------
// checkpoints

/// Everything needed to reproduce inference besides the weights.
struct CheckpointExtras {
  std::vector<std::string> labels;  // index -> class name
  ClipConfig clip;
  StftConfig stft;
  int sample_rate = 44100;
  NormStats stats;
  std::map<std::string, std::string> metadata;
};

struct Checkpoint {
  ParamStore params;
  CheckpointExtras extras;
};

/// Binary "TNET" file (u32 version, fixed-order NetworkSpec fields, then raw
/// float64 tensor payloads in declaration order) plus a <path>.json sidecar
/// carrying the spec, labels, front-end config and normalization stats.
void save_checkpoint(const std::string& path, const ParamStore& params,
                     const CheckpointExtras& extras);
Checkpoint load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// streaming inference

/// Owns frozen parameters and carries LSTM state across consecutive clips,
/// so per-clip latency can be measured end to end.
class InferenceEngine {
 public:
  InferenceEngine(ParamStore params, CheckpointExtras extras);
  explicit InferenceEngine(Checkpoint ckpt);

  /// Raw audio clip -> class probabilities (last LSTM step for M3/M4).
  Eigen::VectorXd step(const AudioSignal& clip);
  void reset();

  const ParamStore& params() const { return params_; }
  const CheckpointExtras& extras() const { return extras_; }

 private:
  ParamStore params_;
  CheckpointExtras extras_;
  LstmState<double> state_;
  ClipTrace scratch_;
  std::mt19937_64 rng_;  // unused in inference mode but required by API
};

}  // namespace terrain
