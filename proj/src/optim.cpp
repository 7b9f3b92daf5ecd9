#include "terrain/optim.hpp"

#include <cmath>

namespace terrain {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw std::invalid_argument("lr0 must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (poly_power < 0.0) throw std::invalid_argument("poly power must be nonnegative");
}

double poly_lr(const TrainConfig& cfg, int iter) {
  cfg.validate();
  if (iter < 0 || iter > cfg.max_iters)
    throw std::invalid_argument("poly_lr: iteration " + std::to_string(iter) +
                                " outside [0, " + std::to_string(cfg.max_iters) + "]");
  return cfg.lr0 * std::pow(1.0 - static_cast<double>(iter) / cfg.max_iters, cfg.poly_power);
}

void sgd_momentum_step(ParamStore& params, const ParamStore& grads, ParamStore& velocity,
                       double lr, double momentum) {
  const auto w = tensor_spans(params);
  const auto g = tensor_spans(grads);
  const auto v = tensor_spans(velocity);
  if (w.size() != g.size() || w.size() != v.size())
    throw std::invalid_argument("sgd_momentum_step: store layouts differ");
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i].size != g[i].size || w[i].size != v[i].size)
      throw std::invalid_argument("sgd_momentum_step: tensor shapes differ");
    Eigen::Map<Eigen::ArrayXd> wv(w[i].data, w[i].size);
    Eigen::Map<const Eigen::ArrayXd> gv(g[i].data, g[i].size);
    Eigen::Map<Eigen::ArrayXd> vv(v[i].data, v[i].size);
    vv = momentum * vv - lr * gv;
    wv += vv;
  }
}

}  // namespace terrain
