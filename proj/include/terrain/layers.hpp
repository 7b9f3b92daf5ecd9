#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

// Differentiable layer kernels. Each forward has a matching backward that
// consumes the forward inputs (and small caches) and accumulates parameter
// gradients with +=, so one gradient store can serve a whole minibatch.
// Activations along a clip are matrices [channels x time]; everything after
// pooling is a plain vector.

namespace terrain {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// parameter blocks

/// Width-3 temporal convolution, stride 1, zero padding 1 (same length).
/// w[k] maps input channels to output channels for tap offset k-1.
template <typename S>
struct Conv3Params {
  std::array<Mat<S>, 3> w;
  Vec<S> b;

  Eigen::Index out_channels() const { return b.size(); }
  Eigen::Index in_channels() const { return w[0].cols(); }
};

/// Per-position linear map across channels: 1x1 convolution / FC layer.
template <typename S>
struct DenseParams {
  Mat<S> w;
  Vec<S> b;
};

template <typename S>
struct LstmParams {
  Mat<S> wxi, whi;
  Vec<S> bi;
  Mat<S> wxf, whf;
  Vec<S> bf;
  Mat<S> wxo, who;
  Vec<S> bo;
  Mat<S> wxc, whc;
  Vec<S> bc;

  Eigen::Index hidden() const { return bi.size(); }
};

// ---------------------------------------------------------------------------
// initialization

/// Entries i.i.d. uniform on [-a, a] with a = sqrt(3 / n_in).
template <typename S>
Mat<S> xavier_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index n_in,
                      std::mt19937_64& rng) {
  if (n_in <= 0) throw std::invalid_argument("xavier_uniform: n_in must be positive");
  const S a = std::sqrt(S(3) / static_cast<S>(n_in));
  std::uniform_real_distribution<S> dist(-a, a);
  Mat<S> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

// ---------------------------------------------------------------------------
// conv3

template <typename S>
Mat<S> conv3_forward(const Conv3Params<S>& p, const Mat<S>& x) {
  if (x.rows() != p.in_channels()) throw std::invalid_argument("conv3: channel mismatch");
  const Eigen::Index t = x.cols();
  Mat<S> y = p.w[1] * x;
  if (t > 1) {
    y.rightCols(t - 1) += p.w[0] * x.leftCols(t - 1);
    y.leftCols(t - 1) += p.w[2] * x.rightCols(t - 1);
  }
  y.colwise() += p.b;
  return y;
}

template <typename S>
void conv3_backward(const Conv3Params<S>& p, const Mat<S>& x, const Mat<S>& dy,
                    Conv3Params<S>& grads, Mat<S>& dx) {
  const Eigen::Index t = x.cols();
  dx.noalias() = p.w[1].transpose() * dy;
  grads.w[1].noalias() += dy * x.transpose();
  if (t > 1) {
    dx.leftCols(t - 1).noalias() += p.w[0].transpose() * dy.rightCols(t - 1);
    dx.rightCols(t - 1).noalias() += p.w[2].transpose() * dy.leftCols(t - 1);
    grads.w[0].noalias() += dy.rightCols(t - 1) * x.leftCols(t - 1).transpose();
    grads.w[2].noalias() += dy.leftCols(t - 1) * x.rightCols(t - 1).transpose();
  }
  grads.b += dy.rowwise().sum();
}

// ---------------------------------------------------------------------------
// cccp (1x1 conv)

template <typename S>
Mat<S> cccp_forward(const DenseParams<S>& p, const Mat<S>& x) {
  if (x.rows() != p.w.cols()) throw std::invalid_argument("cccp: channel mismatch");
  return (p.w * x).colwise() + p.b;
}

template <typename S>
void cccp_backward(const DenseParams<S>& p, const Mat<S>& x, const Mat<S>& dy,
                   DenseParams<S>& grads, Mat<S>& dx) {
  dx.noalias() = p.w.transpose() * dy;
  grads.w.noalias() += dy * x.transpose();
  grads.b += dy.rowwise().sum();
}

// ---------------------------------------------------------------------------
// relu (matrix and vector forms); backward masks on the forward *input*

template <typename S, typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(S(0)).eval();
}

template <typename S>
Mat<S> relu_backward(const Mat<S>& x, const Mat<S>& dy) {
  return (x.array() > S(0)).template cast<S>().matrix().cwiseProduct(dy);
}

template <typename S>
Vec<S> relu_backward(const Vec<S>& x, const Vec<S>& dy) {
  return (x.array() > S(0)).template cast<S>().matrix().cwiseProduct(dy);
}

// ---------------------------------------------------------------------------
// max pooling along time, kernel 2, stride 2, ceil-mode (odd tail keeps a
// one-wide window), so pooled length = ceil(T/2)

template <typename S>
Mat<S> maxpool2_forward(const Mat<S>& x, Eigen::MatrixX<Eigen::Index>& argmax) {
  const Eigen::Index c = x.rows(), t = x.cols();
  if (t < 1) throw std::invalid_argument("maxpool2: empty input");
  const Eigen::Index to = (t + 1) / 2;
  Mat<S> y(c, to);
  argmax.resize(c, to);
  for (Eigen::Index j = 0; j < to; ++j) {
    const Eigen::Index a = 2 * j, b = std::min(2 * j + 1, t - 1);
    for (Eigen::Index r = 0; r < c; ++r) {
      if (x(r, a) >= x(r, b)) {
        y(r, j) = x(r, a);
        argmax(r, j) = a;
      } else {
        y(r, j) = x(r, b);
        argmax(r, j) = b;
      }
    }
  }
  return y;
}

template <typename S>
Mat<S> maxpool2_backward(const Eigen::MatrixX<Eigen::Index>& argmax, const Mat<S>& dy,
                         Eigen::Index t) {
  Mat<S> dx = Mat<S>::Zero(argmax.rows(), t);
  for (Eigen::Index j = 0; j < dy.cols(); ++j)
    for (Eigen::Index r = 0; r < dy.rows(); ++r) dx(r, argmax(r, j)) += dy(r, j);
  return dx;
}

// ---------------------------------------------------------------------------
// global statistical pooling: per channel [max, mean, rms] over time,
// concatenated block-wise as [max_1..C ; mean_1..C ; rms_1..C]

template <typename S>
struct GspCache {
  Eigen::VectorX<Eigen::Index> argmax;
  Vec<S> rms;
};

template <typename S>
Vec<S> gsp_forward(const Mat<S>& x, GspCache<S>& cache) {
  const Eigen::Index c = x.rows(), t = x.cols();
  if (t < 1) throw std::invalid_argument("gsp: empty input");
  Vec<S> y(3 * c);
  cache.argmax.resize(c);
  cache.rms.resize(c);
  for (Eigen::Index r = 0; r < c; ++r) {
    Eigen::Index am;
    y[r] = x.row(r).maxCoeff(&am);
    cache.argmax[r] = am;
    y[c + r] = x.row(r).mean();
    const S rms = std::sqrt(x.row(r).squaredNorm() / static_cast<S>(t));
    y[2 * c + r] = rms;
    cache.rms[r] = rms;
  }
  return y;
}

template <typename S>
Mat<S> gsp_backward(const Mat<S>& x, const GspCache<S>& cache, const Vec<S>& dy) {
  const Eigen::Index c = x.rows(), t = x.cols();
  Mat<S> dx = Mat<S>::Zero(c, t);
  const S inv_t = S(1) / static_cast<S>(t);
  for (Eigen::Index r = 0; r < c; ++r) {
    dx(r, cache.argmax[r]) += dy[r];
    dx.row(r).array() += dy[c + r] * inv_t;
    if (cache.rms[r] > S(0))
      dx.row(r) += (dy[2 * c + r] * inv_t / cache.rms[r]) * x.row(r);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// fully connected

template <typename S>
Vec<S> fc_forward(const DenseParams<S>& p, const Vec<S>& x) {
  if (x.size() != p.w.cols()) throw std::invalid_argument("fc: input size mismatch");
  return p.w * x + p.b;
}

template <typename S>
void fc_backward(const DenseParams<S>& p, const Vec<S>& x, const Vec<S>& dy,
                 DenseParams<S>& grads, Vec<S>& dx) {
  dx.noalias() = p.w.transpose() * dy;
  grads.w.noalias() += dy * x.transpose();
  grads.b += dy;
}

// ---------------------------------------------------------------------------
// inverted dropout: mask entries are 0 or 1/(1-rate), so inference needs no
// rescaling. rate 0 is the identity even in training mode.

template <typename S>
Vec<S> dropout_forward(const Vec<S>& x, S rate, bool training, std::mt19937_64& rng,
                       Vec<S>& mask) {
  if (rate < S(0) || rate >= S(1)) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (!training || rate == S(0)) {
    mask.resize(0);
    return x;
  }
  std::uniform_real_distribution<S> u(S(0), S(1));
  const S keep_scale = S(1) / (S(1) - rate);
  mask.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) mask[i] = u(rng) >= rate ? keep_scale : S(0);
  return x.cwiseProduct(mask);
}

template <typename S>
Vec<S> dropout_backward(const Vec<S>& mask, const Vec<S>& dy) {
  if (mask.size() == 0) return dy;  // was identity
  return dy.cwiseProduct(mask);
}

// ---------------------------------------------------------------------------
// lstm

template <typename S>
struct LstmState {
  Vec<S> h, c;
};

template <typename S>
LstmState<S> lstm_zero_state(Eigen::Index hidden) {
  return {Vec<S>::Zero(hidden), Vec<S>::Zero(hidden)};
}

template <typename S>
struct LstmStepCache {
  Vec<S> x, h_prev, c_prev;
  Vec<S> i, f, o, g, c, tanh_c;
};

template <typename S>
Vec<S> sigmoid(const Vec<S>& z) {
  return z.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
}

template <typename S>
LstmState<S> lstm_step_forward(const LstmParams<S>& p, const Vec<S>& x,
                               const LstmState<S>& prev, LstmStepCache<S>& cache) {
  if (x.size() != p.wxi.cols() || prev.h.size() != p.whi.cols())
    throw std::invalid_argument("lstm_step: shape mismatch");
  cache.x = x;
  cache.h_prev = prev.h;
  cache.c_prev = prev.c;
  cache.i = sigmoid<S>(p.wxi * x + p.whi * prev.h + p.bi);
  cache.f = sigmoid<S>(p.wxf * x + p.whf * prev.h + p.bf);
  cache.o = sigmoid<S>(p.wxo * x + p.who * prev.h + p.bo);
  cache.g = (p.wxc * x + p.whc * prev.h + p.bc).array().tanh();
  cache.c = cache.f.cwiseProduct(prev.c) + cache.i.cwiseProduct(cache.g);
  cache.tanh_c = cache.c.array().tanh();
  return {cache.o.cwiseProduct(cache.tanh_c), cache.c};
}

/// One step of backpropagation through time. dh/dc carry the gradients
/// arriving from the future (and the loss head); outputs replace them with
/// the gradients for the previous step and return dx for the clip below.
template <typename S>
Vec<S> lstm_step_backward(const LstmParams<S>& p, const LstmStepCache<S>& cache, Vec<S>& dh,
                          Vec<S>& dc, LstmParams<S>& grads) {
  const Vec<S> d_o = dh.cwiseProduct(cache.tanh_c);
  const Vec<S> dc_total =
      dc + dh.cwiseProduct(cache.o)
               .cwiseProduct((S(1) - cache.tanh_c.array().square()).matrix());
  const Vec<S> d_f = dc_total.cwiseProduct(cache.c_prev);
  const Vec<S> d_i = dc_total.cwiseProduct(cache.g);
  const Vec<S> d_g = dc_total.cwiseProduct(cache.i);

  // pre-activation gradients
  const Vec<S> zi = d_i.cwiseProduct(cache.i).cwiseProduct((S(1) - cache.i.array()).matrix());
  const Vec<S> zf = d_f.cwiseProduct(cache.f).cwiseProduct((S(1) - cache.f.array()).matrix());
  const Vec<S> zo = d_o.cwiseProduct(cache.o).cwiseProduct((S(1) - cache.o.array()).matrix());
  const Vec<S> zg = d_g.cwiseProduct((S(1) - cache.g.array().square()).matrix());

  grads.wxi.noalias() += zi * cache.x.transpose();
  grads.whi.noalias() += zi * cache.h_prev.transpose();
  grads.bi += zi;
  grads.wxf.noalias() += zf * cache.x.transpose();
  grads.whf.noalias() += zf * cache.h_prev.transpose();
  grads.bf += zf;
  grads.wxo.noalias() += zo * cache.x.transpose();
  grads.who.noalias() += zo * cache.h_prev.transpose();
  grads.bo += zo;
  grads.wxc.noalias() += zg * cache.x.transpose();
  grads.whc.noalias() += zg * cache.h_prev.transpose();
  grads.bc += zg;

  Vec<S> dx = p.wxi.transpose() * zi + p.wxf.transpose() * zf + p.wxo.transpose() * zo +
              p.wxc.transpose() * zg;
  dh = p.whi.transpose() * zi + p.whf.transpose() * zf + p.who.transpose() * zo +
       p.whc.transpose() * zg;
  dc = dc_total.cwiseProduct(cache.f);
  return dx;
}

// ---------------------------------------------------------------------------
// softmax + cross-entropy

/// Max-subtracted softmax; always a valid distribution.
template <typename S>
Vec<S> softmax(const Vec<S>& z) {
  const S m = z.maxCoeff();
  Vec<S> e = (z.array() - m).exp();
  return e / e.sum();
}

/// Numerically stable -log softmax(z)[label]; also emits the probabilities.
template <typename S>
S softmax_cross_entropy(const Vec<S>& z, Eigen::Index label, Vec<S>& probs) {
  if (label < 0 || label >= z.size()) throw std::invalid_argument("cross_entropy: label out of range");
  const S m = z.maxCoeff();
  const Vec<S> shifted = z.array() - m;
  const S log_sum = std::log(shifted.array().exp().sum());
  probs = (shifted.array() - log_sum).exp();
  return log_sum - shifted[label];
}

/// d loss / d logits for the cross-entropy above.
template <typename S>
Vec<S> softmax_cross_entropy_backward(const Vec<S>& probs, Eigen::Index label) {
  Vec<S> d = probs;
  d[label] -= S(1);
  return d;
}

}  // namespace terrain
