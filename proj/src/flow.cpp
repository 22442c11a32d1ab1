#include "swfr/flow.hpp"

#include <string>

namespace swfr {

using namespace ad;

namespace {

struct FwdState {
  Var z, u, l, iphi, iswfr, ir;
};

struct InvState {
  Var z, u;
};

Var renorm_logw(Tape& t, Var u) {
  // shift log-weights by a common constant so the batch weight mean is 1
  return sub_scalar(t, u, log(t, mean(t, exp(t, u))));
}

FwdState fwd_deriv(Tape& t, const ThetaNodes& th, const FwdState& y, Var u0, Var v0w0,
                   double time, const FlowConfig& cfg) {
  PhiEval pe = potential_batch(t, th, y.z, time, true, true);
  Var wcol = exp(t, y.u);
  FwdState d;
  d.z = scalar_mul(t, pe.gradx, -1.0);
  d.l = scalar_mul(t, pe.trace, -1.0);
  d.iphi = pe.phi;
  Var ratio = exp(t, sub(t, y.u, u0));
  Var sq1 = rowsqnorm(t, pe.gradx);
  if (cfg.pure_transport()) {
    d.u = constant(t, Matrix::Zero(t.val(y.u).rows(), 1));
    d.iswfr = scalar_mul(t, mul(t, sq1, ratio), 0.5);
  } else {
    Var phibar = mean(t, mul(t, wcol, pe.phi));  // stage's provisional weights
    Var dev = sub_scalar(t, pe.phi, phibar);
    d.u = scalar_mul(t, dev, -1.0 / cfg.alpha);
    Var sq2 = scalar_mul(t, mul(t, dev, dev), 1.0 / cfg.alpha);
    d.iswfr = scalar_mul(t, mul(t, add(t, sq1, sq2), ratio), 0.5);
  }
  Var gw = mul_colvec(t, pe.gradx, wcol);
  d.ir = mul(t, rowsqnorm(t, sub(t, gw, v0w0)), ratio);
  return d;
}

InvState inv_deriv(Tape& t, const ThetaNodes& th, const InvState& y, double physical_time,
                   const FlowConfig& cfg) {
  PhiEval pe = potential_batch(t, th, y.z, physical_time, true, false);
  InvState d;
  d.z = pe.gradx;
  if (cfg.pure_transport()) {
    d.u = constant(t, Matrix::Zero(t.val(y.u).rows(), 1));
  } else {
    Var wcol = exp(t, y.u);
    Var phihat = mean(t, mul(t, wcol, pe.phi));
    d.u = scalar_mul(t, sub_scalar(t, pe.phi, phihat), 1.0 / cfg.alpha);
  }
  return d;
}

Var axpy(Tape& t, Var y, Var k, double h) { return add(t, y, scalar_mul(t, k, h)); }

FwdState fwd_axpy(Tape& t, const FwdState& y, const FwdState& k, double h) {
  return {axpy(t, y.z, k.z, h),     axpy(t, y.u, k.u, h),         axpy(t, y.l, k.l, h),
          axpy(t, y.iphi, k.iphi, h), axpy(t, y.iswfr, k.iswfr, h), axpy(t, y.ir, k.ir, h)};
}

FwdState fwd_rk4_step(Tape& t, const ThetaNodes& th, const FwdState& y, Var u0, Var v0w0,
                      double time, double h, const FlowConfig& cfg) {
  FwdState k1 = fwd_deriv(t, th, y, u0, v0w0, time, cfg);
  FwdState k2 = fwd_deriv(t, th, fwd_axpy(t, y, k1, 0.5 * h), u0, v0w0, time + 0.5 * h, cfg);
  FwdState k3 = fwd_deriv(t, th, fwd_axpy(t, y, k2, 0.5 * h), u0, v0w0, time + 0.5 * h, cfg);
  FwdState k4 = fwd_deriv(t, th, fwd_axpy(t, y, k3, h), u0, v0w0, time + h, cfg);
  auto comb = [&](Var yv, Var a, Var b, Var c, Var d4) {
    Var s = add(t, add(t, a, scalar_mul(t, add(t, b, c), 2.0)), d4);
    return add(t, yv, scalar_mul(t, s, h / 6.0));
  };
  FwdState out;
  out.z = comb(y.z, k1.z, k2.z, k3.z, k4.z);
  out.u = comb(y.u, k1.u, k2.u, k3.u, k4.u);
  out.l = comb(y.l, k1.l, k2.l, k3.l, k4.l);
  out.iphi = comb(y.iphi, k1.iphi, k2.iphi, k3.iphi, k4.iphi);
  out.iswfr = comb(y.iswfr, k1.iswfr, k2.iswfr, k3.iswfr, k4.iswfr);
  out.ir = comb(y.ir, k1.ir, k2.ir, k3.ir, k4.ir);
  out.u = renorm_logw(t, out.u);
  return out;
}

InvState inv_rk4_step(Tape& t, const ThetaNodes& th, const InvState& y, double tau, double h,
                      const FlowConfig& cfg) {
  const double T = cfg.T;
  InvState k1 = inv_deriv(t, th, y, T - tau, cfg);
  InvState y2{axpy(t, y.z, k1.z, 0.5 * h), axpy(t, y.u, k1.u, 0.5 * h)};
  InvState k2 = inv_deriv(t, th, y2, T - tau - 0.5 * h, cfg);
  InvState y3{axpy(t, y.z, k2.z, 0.5 * h), axpy(t, y.u, k2.u, 0.5 * h)};
  InvState k3 = inv_deriv(t, th, y3, T - tau - 0.5 * h, cfg);
  InvState y4{axpy(t, y.z, k3.z, h), axpy(t, y.u, k3.u, h)};
  InvState k4 = inv_deriv(t, th, y4, T - tau - h, cfg);
  auto comb = [&](Var yv, Var a, Var b, Var c, Var d4) {
    Var s = add(t, add(t, a, scalar_mul(t, add(t, b, c), 2.0)), d4);
    return add(t, yv, scalar_mul(t, s, h / 6.0));
  };
  InvState out{comb(y.z, k1.z, k2.z, k3.z, k4.z), comb(y.u, k1.u, k2.u, k3.u, k4.u)};
  out.u = renorm_logw(t, out.u);
  return out;
}

Var ensemble_mean_phi(Tape& t, const ThetaNodes& th, Var z, Var u, double time) {
  PhiEval pe = potential_batch(t, th, z, time, false, false);
  return mean(t, mul(t, exp(t, u), pe.phi));
}

Vector log_weights(const Vector& w0, Eigen::Index n) {
  require(n >= 1, ErrorCode::invalid_argument, "flow: empty batch");
  require(w0.size() == n, ErrorCode::shape_mismatch, "flow: weight/position count mismatch");
  require((w0.array() > 0.0).all(), ErrorCode::invalid_argument, "flow: weights must be positive");
  return w0.array().log().matrix();
}

}  // namespace

FlowNodes forward_flow_tape(Tape& t, const ThetaNodes& th, const Matrix& X, const Vector& w0,
                            const FlowConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = X.rows();
  Vector u0v = log_weights(w0, n);
  const double h = cfg.T / cfg.nt;

  FlowNodes out;
  FwdState y;
  y.z = t.leaf(X, false);
  y.u = t.leaf(u0v, false);
  Var u0 = y.u;
  Var zeros = constant(t, Matrix::Zero(n, 1));
  y.l = zeros;
  y.iphi = zeros;
  y.iswfr = zeros;
  y.ir = zeros;

  // v0 w0 term of the velocity regularizer, theta-dependent
  PhiEval pe0 = potential_batch(t, th, y.z, 0.0, true, false);
  Var w0col = t.leaf(w0, false);
  Var v0w0 = mul_colvec(t, pe0.gradx, w0col);

  out.z_grid.push_back(y.z);
  out.u_grid.push_back(y.u);
  out.phi_mean.push_back(mean(t, mul(t, w0col, pe0.phi)));

  for (int k = 0; k < cfg.nt; ++k) {
    try {
      y = fwd_rk4_step(t, th, y, u0, v0w0, k * h, h, cfg);
    } catch (const Error& e) {
      throw Error(e.code(), "forward_flow step " + std::to_string(k) + ": " + e.what());
    }
    out.z_grid.push_back(y.z);
    out.u_grid.push_back(y.u);
    out.phi_mean.push_back(ensemble_mean_phi(t, th, y.z, y.u, (k + 1) * h));
  }
  out.l = y.l;
  out.iphi = y.iphi;
  out.iswfr = y.iswfr;
  out.ir = y.ir;
  return out;
}

FlowNodes inverse_flow_tape(Tape& t, const ThetaNodes& th, const Matrix& Zhat, const Vector& w0,
                            const FlowConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = Zhat.rows();
  Vector u0v = log_weights(w0, n);
  const double h = cfg.T / cfg.nt;

  FlowNodes out;
  InvState y{t.leaf(Zhat, false), t.leaf(u0v, false)};
  out.z_grid.push_back(y.z);
  out.u_grid.push_back(y.u);
  out.phi_mean.push_back(ensemble_mean_phi(t, th, y.z, y.u, cfg.T));
  for (int k = 0; k < cfg.nt; ++k) {
    try {
      y = inv_rk4_step(t, th, y, k * h, h, cfg);
    } catch (const Error& e) {
      throw Error(e.code(), "inverse_flow step " + std::to_string(k) + ": " + e.what());
    }
    out.z_grid.push_back(y.z);
    out.u_grid.push_back(y.u);
    out.phi_mean.push_back(ensemble_mean_phi(t, th, y.z, y.u, cfg.T - (k + 1) * h));
  }
  return out;
}

double mean_potential(const Matrix& positions, const Vector& weights, const PotentialParams& p,
                      double time) {
  require(positions.rows() >= 1, ErrorCode::invalid_argument, "mean_potential: empty batch");
  Tape t;
  ThetaNodes th = theta_leaves(t, p, false);
  Var z = t.leaf(positions, false);
  Var u = t.leaf(weights.array().log().matrix(), false);
  if (positions.rows() == 1) {
    // single particle: weight is forced to 1
    PhiEval pe = potential_batch(t, th, z, time, false, false);
    return t.val(pe.phi)(0, 0);
  }
  return t.val(ensemble_mean_phi(t, th, z, u, time))(0, 0);
}

TrajectoryBatch forward_flow(const Matrix& X, const Vector& w0, const PotentialParams& p,
                             const FlowConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = X.rows();
  Vector u = log_weights(w0, n);
  const double h = cfg.T / cfg.nt;

  TrajectoryBatch tb;
  tb.w0 = w0;
  Matrix z = X;
  const Vector u_init = u;  // log w(0), fixed reference for the w(t)/w(0) ratio
  Vector l = Vector::Zero(n), iphi = Vector::Zero(n), iswfr = Vector::Zero(n),
         ir = Vector::Zero(n);

  // initial velocity*weight, constant data for every scratch step
  Matrix v0w0;
  {
    Tape t;
    ThetaNodes th = theta_leaves(t, p, false);
    PhiEval pe0 = potential_batch(t, th, t.leaf(X, false), 0.0, true, false);
    v0w0 = t.val(pe0.gradx);
    v0w0.array().colwise() *= w0.array();
  }

  auto snapshot = [&](double time) {
    tb.tgrid.push_back(time);
    tb.z.push_back(z);
    Vector w = u.array().exp().matrix();
    tb.w.push_back(w);
    tb.l.push_back(l);
    tb.phibar.push_back(mean_potential(z, w, p, time));
  };
  snapshot(0.0);

  for (int k = 0; k < cfg.nt; ++k) {
    try {
      Tape t;
      ThetaNodes th = theta_leaves(t, p, false);
      FwdState y{t.leaf(z, false), t.leaf(u, false), t.leaf(l, false),
                 t.leaf(iphi, false), t.leaf(iswfr, false), t.leaf(ir, false)};
      FwdState next = fwd_rk4_step(t, th, y, t.leaf(u_init, false), t.leaf(v0w0, false), k * h, h, cfg);
      z = t.val(next.z);
      u = t.val(next.u);
      l = t.val(next.l);
      iphi = t.val(next.iphi);
      iswfr = t.val(next.iswfr);
      ir = t.val(next.ir);
    } catch (const Error& e) {
      throw Error(e.code(), "forward_flow step " + std::to_string(k) + ": " + e.what());
    }
    snapshot((k + 1) * h);
  }
  tb.iphi = iphi;
  tb.iswfr = iswfr;
  tb.ir = ir;
  return tb;
}

TrajectoryBatch inverse_flow(const Matrix& Zhat, const PotentialParams& p, const FlowConfig& cfg,
                             const Vector* w0_opt) {
  cfg.validate();
  const Eigen::Index n = Zhat.rows();
  Vector w0 = w0_opt ? *w0_opt : Vector::Ones(n);
  Vector u = log_weights(w0, n);
  const double h = cfg.T / cfg.nt;

  TrajectoryBatch tb;
  tb.w0 = w0;
  Matrix z = Zhat;

  auto snapshot = [&](double tau) {
    tb.tgrid.push_back(tau);
    tb.z.push_back(z);
    Vector w = u.array().exp().matrix();
    tb.w.push_back(w);
    tb.phibar.push_back(mean_potential(z, w, p, cfg.T - tau));
  };
  snapshot(0.0);
  for (int k = 0; k < cfg.nt; ++k) {
    try {
      Tape t;
      ThetaNodes th = theta_leaves(t, p, false);
      InvState y{t.leaf(z, false), t.leaf(u, false)};
      InvState next = inv_rk4_step(t, th, y, k * h, h, cfg);
      z = t.val(next.z);
      u = t.val(next.u);
    } catch (const Error& e) {
      throw Error(e.code(), "inverse_flow step " + std::to_string(k) + ": " + e.what());
    }
    snapshot((k + 1) * h);
  }
  return tb;
}

RoundTripResult round_trip(const Matrix& X, const Vector& w0, const PotentialParams& p,
                           const FlowConfig& cfg) {
  TrajectoryBatch fwd = forward_flow(X, w0, p, cfg);
  Vector wt = fwd.terminal_w();
  TrajectoryBatch inv = inverse_flow(fwd.terminal_z(), p, cfg, &wt);
  const Matrix& xr = inv.terminal_z();
  Vector wr = inv.terminal_w();
  wr *= 1.0 / wr.mean();
  Vector w0n = w0 * (1.0 / w0.mean());
  RoundTripResult r;
  r.position_rmse = std::sqrt((xr - X).squaredNorm() / static_cast<double>(X.rows()));
  r.weight_rmse = std::sqrt((wr - w0n).squaredNorm() / static_cast<double>(w0n.size()));
  return r;
}

}  // namespace swfr
