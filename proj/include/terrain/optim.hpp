#pragma once

#include "terrain/model.hpp"

#include <cstdint>

namespace terrain {

struct TrainConfig {
  int batch_size = 256;
  double lr0 = 0.01;
  double poly_power = 1.0;  // c in lr0 * (1 - N/N_max)^c
  double momentum = 0.9;
  int max_iters = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// lr0 * (1 - iter/max_iters)^c. Defined for 0 <= iter <= max_iters.
double poly_lr(const TrainConfig& cfg, int iter);

/// Velocity update v <- momentum*v - lr*grad, then w <- w + v,
/// applied tensor-by-tensor. Shapes of all three stores must match.
void sgd_momentum_step(ParamStore& params, const ParamStore& grads, ParamStore& velocity,
                       double lr, double momentum);

}  // namespace terrain
