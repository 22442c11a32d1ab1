#include <cmath>
#include <iostream>

#include "swfr/bayes.hpp"
#include "swfr/commands.hpp"
#include "swfr/io.hpp"
#include "swfr/stats.hpp"

namespace swfr {

using namespace ad;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& name, const std::string& detail = "") {
  if (ok) {
    std::cout << "[selftest] " << name << ": ok\n";
  } else {
    ++g_failures;
    std::cout << "[selftest] " << name << ": FAIL" << (detail.empty() ? "" : " (" + detail + ")")
              << "\n";
  }
}

void suite_activation() {
  Tape t;
  bool ok = true;
  // sigma(0) = log 2 and sigma'(x) = tanh(x) against central differences
  Var x0 = t.leaf(Matrix::Constant(1, 1, 0.0), false);
  ok &= std::abs(t.val(act_sigma(t, x0))(0, 0) - std::log(2.0)) < 1e-14;
  for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5, 9.0}) {
    double h = 1e-6;
    auto ev = [&](double v) {
      Tape s;
      return s.val(act_sigma(s, s.leaf(Matrix::Constant(1, 1, v), false)))(0, 0);
    };
    double fd = (ev(x + h) - ev(x - h)) / (2.0 * h);
    ok &= std::abs(fd - std::tanh(x)) < 1e-8;
  }
  check(ok, "activation sigma/tanh relation");
}

void suite_identity_flow() {
  PotentialParams p = init_params(2, 8, 11);
  Rng rng(3);
  Matrix X(16, 2);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 2; ++j) X(i, j) = rng.normal();
  Vector w0 = Vector::Ones(16);
  FlowConfig cfg;
  cfg.alpha = 10.0;
  TrajectoryBatch tb = forward_flow(X, w0, p, cfg);
  bool ok = (tb.terminal_z() - X).cwiseAbs().maxCoeff() < 1e-12 &&
            (tb.terminal_w().array() - 1.0).abs().maxCoeff() < 1e-12 &&
            tb.l.back().cwiseAbs().maxCoeff() < 1e-12;
  check(ok, "identity flow at zero potential");
}

void suite_weight_normalization() {
  Rng rng(17);
  PotentialParams p = init_params(1, 8, 5);
  // random nonzero parameters
  Vector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) += 0.3 * rng.normal();
  p = PotentialParams::unflatten(flat, 1, 8);
  Matrix X(32, 1);
  Vector w0(32);
  for (int i = 0; i < 32; ++i) {
    X(i, 0) = rng.normal();
    w0(i) = 0.5 + rng.uniform();
  }
  w0 *= 1.0 / w0.mean();
  FlowConfig cfg;
  cfg.alpha = 2.0;
  TrajectoryBatch tb = forward_flow(X, w0, p, cfg);
  bool ok = true;
  for (const auto& w : tb.w) {
    ok &= (w.array() > 0.0).all();
    ok &= std::abs(w.mean() - 1.0) < 1e-12;
  }
  check(ok, "weight positivity and per-step normalization");
}

void suite_mean_potential() {
  Rng rng(23);
  PotentialParams p = init_params(2, 8, 9);
  Vector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) += 0.2 * rng.normal();
  p = PotentialParams::unflatten(flat, 2, 8);
  Matrix X(10, 2);
  Vector w(10);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    w(i) = 0.5 + rng.uniform();
  }
  w *= 1.0 / w.mean();
  double got = mean_potential(X, w, p, 0.37);
  double want = 0.0;
  for (int i = 0; i < 10; ++i) want += w(i) * eval_phi(X.row(i).transpose(), 0.37, p);
  want /= 10.0;
  bool ok = std::abs(got - want) < 1e-12;
  // single particle forces weight one
  double one = mean_potential(X.topRows(1), Vector::Constant(1, 5.0), p, 0.37);
  ok &= std::abs(one - eval_phi(X.row(0).transpose(), 0.37, p)) < 1e-12;
  check(ok, "ensemble mean potential");
}

void suite_bernoulli_ode() {
  bool ok = true;
  const double h = 1e-5;
  for (double x : {0.1, 0.2, 0.5, 0.9}) {
    for (double t = 0.0; t <= 10.0; t += 0.5) {
      double g = bernoulli_solve(x, t);
      double dg = (bernoulli_solve(x, t + h) - bernoulli_solve(x, t - h)) / (2.0 * h);
      ok &= std::abs(dg - g + g * g * g) <= 1e-6;
    }
  }
  check(ok, "logistic-cubic ODE residual of the observation map");
}

void suite_likelihood_additivity() {
  BernoulliModel m;
  ObservationSeries s = simulate_observations(m, 42);
  double full = log_likelihood(0.31, s);
  double parts = 0.0;
  for (int b = 0; b < s.size(); b += 7) parts += log_likelihood(0.31, s, b, std::min(b + 7, s.size()));
  bool ok = std::abs(full - parts) < 1e-10 && log_likelihood(0.31, s, 3, 3) == 0.0;
  check(ok, "likelihood additivity over disjoint windows");
}

void suite_adam_scale_free() {
  AdamConfig cfg;
  cfg.lr = 0.1;
  Rng rng(7);
  std::vector<Vector> grads;
  for (int k = 0; k < 30; ++k) {
    Vector g(4);
    for (int i = 0; i < 4; ++i) g(i) = rng.normal();
    grads.push_back(g);
  }
  Vector p1 = Vector::Ones(4), p2 = Vector::Ones(4);
  AdamState s1, s2;
  bool ok = true;
  for (const auto& g : grads) {
    adam_step(p1, g, s1, cfg);
    adam_step(p2, Vector(1000.0 * g), s2, cfg);
    ok &= (p1 - p2).cwiseAbs().maxCoeff() <= 1e-4;
  }
  check(ok, "optimizer scale-freeness");
}

TrainConfig tiny_train_config() {
  TrainConfig tc;
  tc.seed = 5;
  tc.iterations = 4;
  tc.n = 16;
  tc.m = 8;
  tc.flow.alpha = 10.0;
  tc.flow.nt = 4;
  return tc;
}

void suite_determinism() {
  TrainConfig tc = tiny_train_config();
  Rng rng(9);
  WeightedBatch data = sample_weighted(mixture_1d(), tc.n, rng);
  TrainResult a = train_geodesic(data, StdNormalSpec{1}, tc);
  TrainResult b = train_geodesic(data, StdNormalSpec{1}, tc);
  bool ok = a.history.size() == b.history.size();
  for (std::size_t i = 0; ok && i < a.history.size(); ++i)
    ok &= a.history[i].total == b.history[i].total && a.history[i].j_kl == b.history[i].j_kl;
  ok = ok && (a.last.flatten() - b.last.flatten()).cwiseAbs().maxCoeff() == 0.0;
  check(ok, "training determinism under a fixed seed");
}

void suite_checkpoint_roundtrip() {
  TrainConfig tc = tiny_train_config();
  Rng rng(9);
  WeightedBatch data = sample_weighted(mixture_1d(), tc.n, rng);

  // uninterrupted 4 iterations
  TrainResult full = train_geodesic(data, StdNormalSpec{1}, tc);

  // stop after 2, serialize through JSON, resume for 2 more
  TrainConfig half = tc;
  half.iterations = 2;
  TrainResult first = train_geodesic(data, StdNormalSpec{1}, half);
  Checkpoint ck{first.last, first.adam, 2, first.rng_state, nlohmann::json::object()};
  std::string path = "selftest_checkpoint_tmp.json";
  save_checkpoint(path, ck);
  Checkpoint re = load_checkpoint(path);
  std::remove(path.c_str());
  TrainStart resume{re.params, re.adam, re.iteration, re.rng_state};
  TrainResult second = train_geodesic(data, StdNormalSpec{1}, half, &resume);

  bool ok = (second.last.flatten() - full.last.flatten()).cwiseAbs().maxCoeff() == 0.0;
  ok &= second.history.back().total == full.history.back().total;
  check(ok, "checkpoint save/reload round-trip");
}

}  // namespace

int run_selftest() {
  g_failures = 0;
  suite_activation();
  suite_identity_flow();
  suite_weight_normalization();
  suite_mean_potential();
  suite_bernoulli_ode();
  suite_likelihood_additivity();
  suite_adam_scale_free();
  suite_determinism();
  suite_checkpoint_roundtrip();
  std::cout << "[selftest] failures: " << g_failures << "\n";
  return g_failures;
}

}  // namespace swfr
