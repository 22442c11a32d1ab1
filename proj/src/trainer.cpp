#include "swfr/trainer.hpp"

#include <chrono>
#include <iostream>

#include "swfr/stats.hpp"

namespace swfr {

using namespace ad;

namespace {

// Phi-hat series from a value-integrated inverse trajectory: positions and
// weights enter as constants, so gradients flow only through the potential
// evaluated along them.
PhiHatSeries phihat_detached(Tape& t, const ThetaNodes& th, const TrajectoryBatch& inv,
                             double T) {
  PhiHatSeries s;
  s.reserve(inv.z.size());
  for (std::size_t k = 0; k < inv.z.size(); ++k) {
    double phys = T - inv.tgrid[k];
    PhiEval pe = potential_batch(t, th, t.leaf(inv.z[k], false), phys, false, false);
    Var wk = t.leaf(inv.w[k], false);
    s.emplace_back(phys, mean(t, mul(t, wk, pe.phi)));
  }
  return s;
}

PhiHatSeries phihat_full(const FlowNodes& inv_nodes, double T, int nt) {
  PhiHatSeries s;
  double h = T / nt;
  for (std::size_t k = 0; k < inv_nodes.phi_mean.size(); ++k)
    s.emplace_back(T - k * h, inv_nodes.phi_mean[k]);
  return s;
}

}  // namespace

TrainResult train_geodesic(const WeightedBatch& rho0, const DistributionSpec& rho1,
                           const TrainConfig& cfg, const TrainStart* resume,
                           const MetricsCallback& on_metrics,
                           const CheckpointCallback& on_checkpoint) {
  cfg.validate();
  require(rho0.x.rows() >= 1, ErrorCode::invalid_argument, "train_geodesic: empty rho0 sample");
  require(rho0.x.rows() == rho0.w.size(), ErrorCode::shape_mismatch,
          "train_geodesic: rho0 sample/weight mismatch");
  require((rho0.w.array() > 0.0).all(), ErrorCode::invalid_argument,
          "train_geodesic: rho0 weights must be positive");
  require(has_density(rho1), ErrorCode::invalid_argument,
          "train_geodesic: rho1 needs a tractable log-density");
  const int d = static_cast<int>(rho0.x.cols());
  require(dim(rho1) == d, ErrorCode::shape_mismatch, "train_geodesic: rho0/rho1 dimension");
  const int n_avail = static_cast<int>(rho0.x.rows());
  const int nb = std::min(cfg.effective_batch(), n_avail);

  PotentialParams params;
  AdamState adam;
  Rng rng(cfg.seed);
  long start_iter = 0;
  if (resume) {
    params = resume->params;
    adam = resume->adam;
    start_iter = resume->iteration;
    if (!resume->rng_state.empty()) rng.restore(resume->rng_state);
  } else {
    params = init_params(d, cfg.m, cfg.seed + 1);
  }
  require(params.d() == d, ErrorCode::shape_mismatch, "train_geodesic: warm-start dimension");

  Vector flat = params.flatten();
  if (adam.m.size() == 0) adam.reset(flat.size());

  TrainResult res;
  res.best_total = std::numeric_limits<double>::infinity();
  res.history.reserve(cfg.iterations);

  for (long it = start_iter; it < start_iter + cfg.iterations; ++it) {
    auto t0 = std::chrono::steady_clock::now();

    // batch selection (full batch keeps the given order)
    Matrix X;
    Vector w0;
    if (nb == n_avail) {
      X = rho0.x;
      w0 = rho0.w;
    } else {
      X.resize(nb, d);
      w0.resize(nb);
      for (int i = 0; i < nb; ++i) {
        int idx = static_cast<int>(rng.uniform() * n_avail);
        idx = std::min(idx, n_avail - 1);
        X.row(i) = rho0.x.row(idx);
        w0(i) = rho0.w(idx);
      }
      w0 *= 1.0 / w0.mean();
    }
    Matrix Zhat = sample(rho1, nb, rng);

    Tape t;
    ThetaNodes th = theta_leaves(t, params, true);
    FlowNodes fwd = forward_flow_tape(t, th, X, w0, cfg.flow);
    PhiHatSeries phihat;
    if (!cfg.flow.pure_transport()) {
      if (cfg.full_graph_phihat) {
        FlowNodes inv = inverse_flow_tape(t, th, Zhat, Vector::Ones(nb), cfg.flow);
        phihat = phihat_full(inv, cfg.flow.T, cfg.flow.nt);
      } else {
        TrajectoryBatch inv = inverse_flow(Zhat, params, cfg.flow);
        phihat = phihat_detached(t, th, inv, cfg.flow.T);
      }
    } else {
      // unused in pure transport but keeps the loss call uniform
      phihat.emplace_back(0.0, constant(t, Matrix::Zero(1, 1)));
      phihat.emplace_back(cfg.flow.T, constant(t, Matrix::Zero(1, 1)));
    }
    Var w0col = t.leaf(w0, false);
    LossNodes loss =
        total_loss_tape(t, fwd, phihat, rho1, w0col, cfg.flow, cfg.gamma1, cfg.gamma2);
    require(std::isfinite(loss.values.total), ErrorCode::non_finite,
            "train_geodesic: non-finite loss at iteration " + std::to_string(it));

    t.backward(loss.total);
    Vector grad = gather_theta_grad(t, th);
    adam_step(flat, grad, adam, cfg.adam);
    PotentialParams next = PotentialParams::unflatten(flat, d, cfg.m);

    Vector wT = t.val(fwd.u_grid.back()).col(0).array().exp().matrix();
    double n_eff = ess(wT);
    if (n_eff < 0.1 * nb)
      std::cerr << "warning: effective sample size " << n_eff << " below 0.1*n at iteration "
                << it << "\n";

    res.history.push_back(loss.values);
    if (loss.values.total < res.best_total) {
      res.best_total = loss.values.total;
      res.best_iter = it;
      res.params = params;  // parameters that produced this loss
    }
    params = next;

    double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (on_metrics) on_metrics(it, loss.values, wall_ms, n_eff);
    if (on_checkpoint && cfg.checkpoint_every > 0 &&
        (it + 1 - start_iter) % cfg.checkpoint_every == 0) {
      TrainStart snap{params, adam, it + 1, rng.state()};
      on_checkpoint(snap);
    }
    res.iterations_run = it + 1 - start_iter;
  }

  res.last = params;
  res.adam = adam;
  res.rng_state = rng.state();
  if (res.best_iter < 0) res.params = params;
  return res;
}

WeightedBatch generate_weighted_samples(const PotentialParams& params,
                                        const DistributionSpec& rho1, int count,
                                        const FlowConfig& cfg, Rng& rng) {
  require(count >= 1, ErrorCode::invalid_argument, "generate_weighted_samples: count >= 1");
  Matrix Zhat = sample(rho1, count, rng);
  TrajectoryBatch inv = inverse_flow(Zhat, params, cfg);
  WeightedBatch out;
  out.x = inv.terminal_z();
  out.w = inv.terminal_w();
  out.w *= 1.0 / out.w.mean();
  return out;
}

OnlineUpdateResult online_update(const PotentialParams& params, const AdamState& adam,
                                 const std::function<double(const Vector&)>& log_lik,
                                 const DistributionSpec& rho1, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  OnlineUpdateResult out;
  out.ensemble = generate_weighted_samples(params, rho1, cfg.n, cfg.flow, rng);

  if (log_lik) {
    const int n = static_cast<int>(out.ensemble.x.rows());
    Vector logw(n);
    for (int i = 0; i < n; ++i) {
      logw(i) = std::log(out.ensemble.w(i)) + log_lik(out.ensemble.x.row(i).transpose());
    }
    double mx = logw.maxCoeff();
    require(std::isfinite(mx), ErrorCode::numeric,
            "online_update: all window likelihoods vanished, ensemble collapsed");
    out.ensemble.w = (logw.array() - mx).exp().matrix();
    out.ensemble.w *= 1.0 / out.ensemble.w.mean();
  }
  out.n_eff = ess(out.ensemble.w);
  if (out.n_eff < 0.1 * out.ensemble.w.size()) {
    out.ess_warning = true;
    std::cerr << "warning: online_update effective sample size " << out.n_eff
              << " below 0.1*n\n";
  }

  TrainConfig retrain = cfg;
  retrain.iterations = cfg.online_iterations;
  retrain.adam.lr = cfg.online_lr;
  TrainStart warm{params, adam, 0, rng.state()};
  warm.adam.reset(params.flatten().size());  // fresh moments for the new objective
  out.train = train_geodesic(out.ensemble, rho1, retrain, &warm);
  rng.restore(out.train.rng_state);
  return out;
}

}  // namespace swfr
