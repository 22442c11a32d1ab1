#pragma once

#include "swfr/common.hpp"

namespace swfr {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 0.0;  // 0 disables clipping
};

struct AdamState {
  Vector m, v;
  long step = 0;

  void reset(Eigen::Index size) {
    m = Vector::Zero(size);
    v = Vector::Zero(size);
    step = 0;
  }
};

// In-place update with bias correction; grad is clipped to max_grad_norm
// first when enabled.
void adam_step(Vector& params, const Vector& grad, AdamState& st, const AdamConfig& cfg);

}  // namespace swfr
