#include "swfr/optim.hpp"

#include <cmath>

namespace swfr {

void adam_step(Vector& params, const Vector& grad, AdamState& st, const AdamConfig& cfg) {
  require(params.size() == grad.size(), ErrorCode::shape_mismatch,
          "adam_step: param/grad size mismatch");
  if (st.m.size() == 0) st.reset(params.size());
  require(st.m.size() == params.size(), ErrorCode::shape_mismatch,
          "adam_step: stale optimizer state");
  require(grad.allFinite(), ErrorCode::non_finite, "adam_step: non-finite gradient");

  Vector g = grad;
  if (cfg.max_grad_norm > 0.0) {
    double nrm = g.norm();
    if (nrm > cfg.max_grad_norm) g *= cfg.max_grad_norm / nrm;
  }

  st.step += 1;
  st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * g;
  st.v = (cfg.beta2 * st.v.array() + (1.0 - cfg.beta2) * g.array().square()).matrix();
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  params.array() -=
      cfg.lr * (st.m.array() / bc1) / ((st.v.array() / bc2).sqrt() + cfg.eps);
}

}  // namespace swfr
