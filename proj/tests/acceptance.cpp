// Acceptance harness: one criterion per invocation, one PASS/FAIL line per
// criterion, nonzero exit on failure.
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "swfr/bayes.hpp"
#include "swfr/commands.hpp"
#include "swfr/loss.hpp"
#include "swfr/stats.hpp"
#include "swfr/trainer.hpp"

using namespace swfr;

namespace {

bool g_ok = true;
std::string g_detail;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    g_ok = false;
    if (!g_detail.empty()) g_detail += "; ";
    g_detail += what;
  }
}

PotentialParams perturbed_params(int d, int m, std::uint64_t seed, double scale) {
  PotentialParams p = init_params(d, m, seed);
  Rng rng(seed + 10000);
  Vector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) += scale * rng.normal();
  return PotentialParams::unflatten(flat, d, m);
}

// ---- criterion 1: loss gradient vs central finite differences ----------

double loss_grad_check(int d, int n, int nt, int m, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, d), Z(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      X(i, j) = rng.normal();
      Z(i, j) = rng.normal();
    }
  Vector w0(n);
  for (int i = 0; i < n; ++i) w0(i) = 0.5 + rng.uniform();
  w0 *= 1.0 / w0.mean();
  FlowConfig cfg;
  cfg.alpha = (seed % 3 == 0) ? 1.0 : (seed % 3 == 1 ? 2.0 : 10.0);
  cfg.nt = nt;
  const double g1 = 0.01, g2 = 0.01;
  DistributionSpec rho1 = StdNormalSpec{d};
  PotentialParams base = perturbed_params(d, m, seed, 0.25);

  auto f = [&](const std::vector<double>& p) {
    Vector flat = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
    PotentialParams params = PotentialParams::unflatten(flat, d, m);
    ad::Tape t;
    ThetaNodes th = theta_leaves(t, params, true);
    FlowNodes fwd = forward_flow_tape(t, th, X, w0, cfg);
    // full-graph Phi-hat so the scalar is a plain function of theta
    FlowNodes inv = inverse_flow_tape(t, th, Z, Vector::Ones(n), cfg);
    PhiHatSeries phihat;
    double h = cfg.T / cfg.nt;
    for (std::size_t k = 0; k < inv.phi_mean.size(); ++k)
      phihat.emplace_back(cfg.T - k * h, inv.phi_mean[k]);
    ad::Var w0col = t.leaf(w0, false);
    LossNodes loss = total_loss_tape(t, fwd, phihat, rho1, w0col, cfg, g1, g2);
    t.backward(loss.total);
    Vector grad = gather_theta_grad(t, th);
    std::vector<double> gv(grad.data(), grad.data() + grad.size());
    return std::pair<double, std::vector<double>>{loss.values.total, gv};
  };

  Vector flat0 = base.flatten();
  std::vector<double> point(flat0.data(), flat0.data() + flat0.size());
  auto [value, grad] = f(point);
  (void)value;
  double gmax = 0.0;
  for (double gi : grad) gmax = std::max(gmax, std::abs(gi));
  // relative error with a scale-aware floor: coordinates whose true gradient
  // vanishes (the time entry of b and the offset c drop out of the loss)
  // would otherwise divide finite-difference roundoff by itself
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    std::vector<double> lo = point, hi = point;
    hi[i] += h;
    lo[i] -= h;
    double fd = (f(hi).first - f(lo).first) / (2.0 * h);
    double rel = std::abs(grad[i] - fd) / (std::abs(grad[i]) + std::abs(fd) + 1e-3 * gmax);
    worst = std::max(worst, rel);
  }
  return worst;
}

void criterion_1() {
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    int d = 1 + k % 3;
    double err = loss_grad_check(d, 8, 4, 8, 100 + k);
    worst = std::max(worst, err);
  }
  expect(worst <= 1e-5, "max relative gradient error " + std::to_string(worst));
}

// ---- criterion 2: integrator oracles -----------------------------------

void criterion_2() {
  PotentialParams quad = init_params(1, 4, 0);
  quad.A(0, 0) = 1.0;
  FlowConfig cfg;
  cfg.alpha = 1.0;
  cfg.nt = 8;
  Matrix X1 = Matrix::Constant(1, 1, 1.0);
  TrajectoryBatch tq = forward_flow(X1, Vector::Ones(1), quad, cfg);
  expect(std::abs(tq.terminal_z()(0, 0) - std::exp(-1.0)) <= 1e-5, "quadratic z(1)");
  expect(std::abs(tq.l.back()(0) + 1.0) <= 1e-5, "quadratic l(1)");

  PotentialParams lin = init_params(1, 4, 0);
  lin.b(0) = 1.0;
  cfg.nt = 32;
  Matrix X2(2, 1);
  X2 << 0.0, 2.0;
  TrajectoryBatch tl = forward_flow(X2, Vector::Ones(2), lin, cfg);
  expect(std::abs(tl.terminal_w()(0) - 2.0 / (1.0 + std::exp(-2.0))) <= 1e-4, "logistic w1(1)");

  std::vector<double> err;
  for (int nt : {8, 16, 32, 64}) {
    cfg.nt = nt;
    TrajectoryBatch tb = forward_flow(X1, Vector::Ones(1), quad, cfg);
    err.push_back(std::abs(tb.terminal_z()(0, 0) - std::exp(-1.0)));
  }
  for (int k = 0; k < 3; ++k) {
    double order = std::log2(err[k] / err[k + 1]);
    expect(order >= 3.5 && order <= 4.5, "convergence order " + std::to_string(order));
  }
}

// ---- criterion 3: loss oracles at zero potential ------------------------

void criterion_3() {
  Rng rng(2024);
  Matrix X = sample(DistributionSpec{mixture_1d()}, 2048, rng);
  PotentialParams p0 = init_params(1, 4, 0);
  FlowConfig cfg;
  cfg.alpha = 10.0;
  TrajectoryBatch fwd = forward_flow(X, Vector::Ones(2048), p0, cfg);
  Matrix Z = sample(DistributionSpec{StdNormalSpec{1}}, 2048, rng);
  TrajectoryBatch inv = inverse_flow(Z, p0, cfg);
  LossTerms lt = total_loss(fwd, inv, StdNormalSpec{1}, cfg, 0.01, 0.01);

  double direct = 0.0;
  for (int i = 0; i < 2048; ++i)
    direct += 0.5 * X(i, 0) * X(i, 0) + 0.5 * std::log(2.0 * M_PI);
  direct /= 2048.0;
  expect(std::abs(lt.j_kl - direct) <= 1e-12, "J_KL independent-pass mismatch");
  expect(std::abs(lt.j_kl - 5.918939) <= 0.25, "J_KL far from the analytic limit");
  expect(lt.j_swfr == 0.0, "J_SWFR not exactly zero");
  expect(lt.j_r == 0.0, "J_R not exactly zero");
}

// ---- criterion 4: 1-D mixture geodesic ----------------------------------

TrainConfig mixture_config() {
  TrainConfig tc;
  tc.seed = 1;
  tc.iterations = std::getenv("SWFR_FAST") ? 60 : 600;
  tc.n = 2048;
  tc.m = 32;
  tc.flow.alpha = 10.0;
  tc.flow.nt = 8;
  tc.gamma1 = 0.01;
  tc.gamma2 = 0.01;
  return tc;
}

void criterion_4() {
  TrainConfig tc = mixture_config();
  Rng rng(tc.seed + 7);
  WeightedBatch data = sample_weighted(mixture_1d(), tc.n, rng);
  TrainResult res = train_geodesic(data, StdNormalSpec{1}, tc);
  TrajectoryBatch tb = forward_flow(data.x, data.w, res.params, tc.flow);

  Vector zT = tb.terminal_z().col(0);
  double ks = weighted_ks(zT, tb.terminal_w(), std_normal_cdf);
  expect(ks <= 0.05, "terminal weighted KS " + std::to_string(ks));
  double jswfr = res.history[static_cast<std::size_t>(res.best_iter)].j_swfr;
  expect(jswfr <= 2.71, "J_SWFR " + std::to_string(jswfr));
  RoundTripResult rt = round_trip(data.x, data.w, res.params, tc.flow);
  expect(rt.position_rmse <= 1e-2, "round-trip RMSE " + std::to_string(rt.position_rmse));
  expect(res.iterations_run <= 2000, "iteration budget");
}

// ---- criterion 5: alpha / gamma1 sweep trends ---------------------------

double sweep_jswfr(const WeightedBatch& data, double alpha, double gamma1, int iters) {
  TrainConfig tc;
  tc.seed = 1;
  tc.iterations = iters;
  tc.n = static_cast<int>(data.x.rows());
  tc.m = 32;
  tc.flow.alpha = alpha;
  tc.flow.nt = 8;
  tc.gamma1 = gamma1;
  tc.gamma2 = 0.0;
  // slower rate than the single-run fit: at lr 1e-2 the small-alpha runs
  // drift into a degenerate regime (weight collapse, exploding action) before
  // the budget is up, and the trend comparison picks up the debris
  tc.adam.lr = 0.005;
  TrainResult res = train_geodesic(data, StdNormalSpec{1}, tc);
  return res.history[static_cast<std::size_t>(res.best_iter)].j_swfr;
}

void criterion_5() {
  int iters = std::getenv("SWFR_FAST") ? 40 : 400;
  int n = 1024;
  Rng rng(8);
  WeightedBatch data = sample_weighted(mixture_1d(), n, rng);
  double j1 = sweep_jswfr(data, 1.0, 0.01, iters);
  double j2 = sweep_jswfr(data, 2.0, 0.01, iters);
  double j10 = sweep_jswfr(data, 10.0, 0.01, iters);
  expect(j1 < j2, "J_SWFR(alpha=1) < J_SWFR(alpha=2): " + std::to_string(j1) + " vs " +
                      std::to_string(j2));
  expect(j2 < j10, "J_SWFR(alpha=2) < J_SWFR(alpha=10): " + std::to_string(j2) + " vs " +
                       std::to_string(j10));
  expect(j10 <= 2.71, "J_SWFR(alpha=10) " + std::to_string(j10));

  double glo = sweep_jswfr(data, 10.0, 1e-3, iters);
  double ghi = sweep_jswfr(data, 10.0, 1e-1, iters);
  expect(glo >= ghi - 0.05, "gamma1 trend: " + std::to_string(glo) + " vs " +
                                std::to_string(ghi));
}

// ---- criteria 6/7: Bernoulli experiment ---------------------------------

struct BayesOutcome {
  double mean_err, std_err, w1;
};

// midpoint quantile of N(0,1), bisection on the cdf
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int k = 0; k < 80; ++k) {
    double mid = 0.5 * (lo + hi);
    (std_normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// stratified prior ensemble: quantile midpoints of N(mu, 1), so the weighted
// ensemble carries quadrature-level rather than Monte-Carlo-level error
Vector stratified_prior(int n, double mu) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = mu + normal_quantile((i + 0.5) / n);
  return x;
}

BayesOutcome bayes_compare(const PotentialParams& params, const TrainConfig& tc,
                           const PosteriorOracle& oracle, Rng& rng, int n_generate) {
  WeightedBatch gen = generate_weighted_samples(params, StdNormalSpec{1}, n_generate,
                                                tc.flow, rng);
  Vector gx = gen.x.col(0);
  BayesOutcome o;
  o.mean_err = std::abs(weighted_mean(gx, gen.w) - oracle.mean);
  o.std_err = std::abs(weighted_std(gx, gen.w) - std::sqrt(oracle.variance));
  o.w1 = weighted_w1(gx, gen.w, oracle.x, oracle.w);
  return o;
}

void criterion_6() {
  BernoulliModel model;  // T=50, dt=1, sigma=0.4, x_true=0.2
  ObservationSeries series = simulate_observations(model, 101);
  PosteriorOracle oracle = posterior_oracle(0.5, 1.0, series, 1000000, 201);

  TrainConfig tc;
  tc.seed = 2;
  tc.iterations = std::getenv("SWFR_FAST") ? 60 : 600;
  tc.n = 1024;
  tc.m = 32;
  tc.flow.alpha = 10.0;
  tc.flow.nt = 8;
  tc.adam.max_grad_norm = 10.0;

  Rng rng(tc.seed);
  Vector x = stratified_prior(tc.n, 0.5);
  Vector logw(tc.n);
  for (int i = 0; i < tc.n; ++i) logw(i) = log_likelihood(x(i), series);
  WeightedBatch ens;
  ens.x = x;
  ens.w = (logw.array() - logw.maxCoeff()).exp().matrix();
  ens.w *= 1.0 / ens.w.mean();
  TrainResult res = train_geodesic(ens, StdNormalSpec{1}, tc);

  BayesOutcome o = bayes_compare(res.params, tc, oracle, rng, 8192);
  expect(o.mean_err <= 0.02, "posterior mean error " + std::to_string(o.mean_err));
  expect(o.std_err <= 0.02, "posterior std error " + std::to_string(o.std_err));
  expect(o.w1 <= 0.05, "W1 distance " + std::to_string(o.w1));
}

void criterion_7() {
  BernoulliModel model;
  model.dt = 0.1;
  model.window = 5;
  model.n_obs = 50;
  ObservationSeries series = simulate_observations(model, 102);
  PosteriorOracle oracle = posterior_oracle(0.5, 1.0, series, 1000000, 202);

  TrainConfig tc;
  tc.seed = 3;
  tc.iterations = std::getenv("SWFR_FAST") ? 60 : 500;
  tc.n = 1024;
  tc.m = 32;
  tc.flow.alpha = 10.0;
  tc.flow.nt = 8;
  tc.adam.max_grad_norm = 10.0;

  Rng rng(tc.seed);
  WeightedBatch prior_ens;
  prior_ens.x = stratified_prior(tc.n, 0.5);
  prior_ens.w = Vector::Ones(tc.n);
  TrainResult res = train_geodesic(prior_ens, StdNormalSpec{1}, tc);
  PotentialParams params = res.params;
  AdamState adam = res.adam;

  TrainConfig tc_online = tc;  // default short, slow window refits
  if (std::getenv("SWFR_FAST")) tc_online.online_iterations = 20;

  double accumulated = 0.0;
  int n_windows = series.size() / model.window;
  for (int w = 0; w < n_windows; ++w) {
    int begin = w * model.window, end = begin + model.window;
    accumulated += log_likelihood(0.2, series, begin, end);
    auto log_lik = [&](const Vector& pos) {
      return log_likelihood(pos(0), series, begin, end);
    };
    OnlineUpdateResult up = online_update(params, adam, log_lik, StdNormalSpec{1}, tc_online, rng);
    params = up.train.params;
    adam = up.train.adam;
  }
  expect(std::abs(accumulated - log_likelihood(0.2, series)) <= 1e-10,
         "window log-likelihood factorization");

  BayesOutcome o = bayes_compare(params, tc, oracle, rng, 8192);
  expect(o.mean_err <= 0.02, "posterior mean error " + std::to_string(o.mean_err));
  expect(o.std_err <= 0.02, "posterior std error " + std::to_string(o.std_err));
  expect(o.w1 <= 0.05, "W1 distance " + std::to_string(o.w1));
}

// ---- criterion 8: 2-D eight-Gaussians generation ------------------------

void criterion_8() {
  EightGaussiansSpec spec;
  TrainConfig tc;
  tc.seed = 4;
  tc.iterations = std::getenv("SWFR_FAST") ? 60 : 800;
  tc.n = 1024;
  tc.m = 32;
  tc.flow.alpha = 10.0;
  tc.flow.nt = 8;

  Rng rng(tc.seed + 7);
  WeightedBatch data = sample_weighted(spec, tc.n, rng);
  TrainResult res = train_geodesic(data, StdNormalSpec{2}, tc);

  Rng gen_rng(99);
  WeightedBatch gen =
      generate_weighted_samples(res.params, StdNormalSpec{2}, 8192, tc.flow, gen_rng);

  GaussianMixtureSpec modes = eight_gaussians_mixture(spec);
  double captured = 0.0, total = gen.w.sum();
  Vector share = Vector::Zero(8);
  for (int i = 0; i < gen.x.rows(); ++i) {
    Vector p = gen.x.row(i).transpose();
    int best = -1;
    double bestd = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 8; ++k) {
      double dk = (p - modes.components[k].mean).norm();
      if (dk < bestd) {
        bestd = dk;
        best = k;
      }
    }
    if (bestd <= 3.0 * spec.component_std) {
      captured += gen.w(i);
      share(best) += gen.w(i);
    }
  }
  double frac = captured / total;
  expect(frac >= 0.95, "weight near modes " + std::to_string(frac));
  for (int k = 0; k < 8; ++k) {
    double s = share(k) / total;
    expect(std::abs(s - 0.125) <= 0.06,
           "mode " + std::to_string(k) + " share " + std::to_string(s));
  }
}

// ---- criterion 9: property suites ---------------------------------------

void criterion_9() { expect(run_selftest() == 0, "selftest failures"); }

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1..9>\n";
    return 2;
  }
  int crit = std::atoi(argv[1]);
  try {
    switch (crit) {
      case 1: criterion_1(); break;
      case 2: criterion_2(); break;
      case 3: criterion_3(); break;
      case 4: criterion_4(); break;
      case 5: criterion_5(); break;
      case 6: criterion_6(); break;
      case 7: criterion_7(); break;
      case 8: criterion_8(); break;
      case 9: criterion_9(); break;
      default:
        std::cerr << "unknown criterion " << crit << "\n";
        return 2;
    }
  } catch (const std::exception& e) {
    g_ok = false;
    g_detail = std::string("exception: ") + e.what();
  }
  std::cout << "criterion " << crit << ": " << (g_ok ? "PASS" : "FAIL")
            << (g_detail.empty() ? "" : " (" + g_detail + ")") << "\n";
  return g_ok ? 0 : 1;
}
