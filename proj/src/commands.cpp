#include "swfr/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>

#include "swfr/io.hpp"
#include "swfr/stats.hpp"

namespace swfr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double parse_alpha(const json& v, const std::string& context) {
  if (v.is_string()) {
    require(v.get<std::string>() == "inf", ErrorCode::config,
            context + ": alpha must be a positive number or \"inf\"");
    return std::numeric_limits<double>::infinity();
  }
  require(v.is_number(), ErrorCode::config, context + ": alpha must be a number or \"inf\"");
  double a = v.get<double>();
  require(a > 0.0, ErrorCode::config, context + ": alpha must be positive");
  return a;
}

fs::path run_dir(const json& cfg, const std::string& context) {
  std::string out = cfg.value("output_dir", std::string("out"));
  if (const char* env = std::getenv("SWFR_OUTPUT_DIR")) out = env;
  require(cfg.contains("name"), ErrorCode::config, context + ": missing \"name\"");
  fs::path dir = fs::path(out) / cfg.at("name").get<std::string>();
  fs::create_directories(dir);
  return dir;
}

Vector col0(const Matrix& m) { return m.col(0); }

void histogram_svg(const fs::path& path, const Matrix& x, const Vector& w,
                   const std::vector<double>* curve_x, const std::vector<double>* curve_y,
                   const std::string& xlabel) {
  // weighted density histogram for 1-D samples, optional overlay curve
  Vector xs = col0(x);
  double lo = xs.minCoeff(), hi = xs.maxCoeff();
  if (hi - lo < 1e-9) hi = lo + 1.0;
  const int bins = 60;
  double bw = (hi - lo) / bins;
  std::vector<double> dens(bins, 0.0);
  double wsum = w.sum();
  for (int i = 0; i < xs.size(); ++i) {
    int b = std::min(bins - 1, static_cast<int>((xs(i) - lo) / bw));
    dens[b] += w(i) / (wsum * bw);
  }
  double dmax = *std::max_element(dens.begin(), dens.end());
  if (curve_y)
    for (double v : *curve_y) dmax = std::max(dmax, v);
  SvgFigure fig(640, 420, lo, hi, 0.0, dmax * 1.08);
  for (int b = 0; b < bins; ++b)
    fig.vbar(lo + (b + 0.5) * bw, bw, dens[b], "#4878cf");
  if (curve_x && curve_y) fig.polyline(*curve_x, *curve_y, "#d65f5f", 2.0);
  fig.axes(xlabel, "density");
  fig.save(path.string());
}

void scatter_svg(const fs::path& path, const Matrix& x, const Vector& w) {
  double lo0 = x.col(0).minCoeff(), hi0 = x.col(0).maxCoeff();
  double lo1 = x.col(1).minCoeff(), hi1 = x.col(1).maxCoeff();
  SvgFigure fig(560, 560, lo0 - 0.5, hi0 + 0.5, lo1 - 0.5, hi1 + 0.5);
  double wmax = w.maxCoeff();
  for (int i = 0; i < x.rows(); ++i)
    fig.circle(x(i, 0), x(i, 1), 1.0 + 2.0 * w(i) / wmax, "#4878cf");
  fig.axes("x0", "x1");
  fig.save(path.string());
}

void trajectory_fan_svg(const fs::path& path, const TrajectoryBatch& tb) {
  const int d = static_cast<int>(tb.z.front().cols());
  const int keep = std::min(128, tb.n());
  if (d == 1) {
    double lo = 0.0, hi = 0.0;
    for (const auto& zk : tb.z) {
      lo = std::min(lo, zk.col(0).head(keep).minCoeff());
      hi = std::max(hi, zk.col(0).head(keep).maxCoeff());
    }
    SvgFigure fig(640, 420, tb.tgrid.front(), tb.tgrid.back(), lo - 0.2, hi + 0.2);
    for (int i = 0; i < keep; ++i) {
      std::vector<double> xs, ys;
      for (std::size_t k = 0; k < tb.z.size(); ++k) {
        xs.push_back(tb.tgrid[k]);
        ys.push_back(tb.z[k](i, 0));
      }
      fig.polyline(xs, ys, "#4878cf", 0.6);
    }
    fig.axes("t", "z");
    fig.save(path.string());
  } else {
    double lo0 = tb.z.front().col(0).minCoeff(), hi0 = tb.z.front().col(0).maxCoeff();
    double lo1 = tb.z.front().col(1).minCoeff(), hi1 = tb.z.front().col(1).maxCoeff();
    for (const auto& zk : tb.z) {
      lo0 = std::min(lo0, zk.col(0).minCoeff());
      hi0 = std::max(hi0, zk.col(0).maxCoeff());
      lo1 = std::min(lo1, zk.col(1).minCoeff());
      hi1 = std::max(hi1, zk.col(1).maxCoeff());
    }
    SvgFigure fig(560, 560, lo0 - 0.2, hi0 + 0.2, lo1 - 0.2, hi1 + 0.2);
    for (int i = 0; i < keep; ++i) {
      std::vector<double> xs, ys;
      for (std::size_t k = 0; k < tb.z.size(); ++k) {
        xs.push_back(tb.z[k](i, 0));
        ys.push_back(tb.z[k](i, 1));
      }
      fig.polyline(xs, ys, "#4878cf", 0.6);
    }
    fig.axes("x0", "x1");
    fig.save(path.string());
  }
}

}  // namespace

DistributionSpec parse_distribution(const json& j, const std::string& context) {
  require(j.is_object() && j.contains("type"), ErrorCode::config,
          context + ": distribution needs a \"type\"");
  std::string type = j.at("type").get<std::string>();
  if (type == "std_normal") {
    check_keys(j, {"type", "d"}, context);
    StdNormalSpec s;
    s.d = j.value("d", 1);
    require(s.d >= 1, ErrorCode::config, context + ": d must be >= 1");
    return s;
  }
  if (type == "mixture_1d") {
    check_keys(j, {"type"}, context);
    return mixture_1d();
  }
  if (type == "gaussian_mixture") {
    check_keys(j, {"type", "d", "components"}, context);
    GaussianMixtureSpec s;
    s.d = j.value("d", 1);
    require(j.contains("components") && j.at("components").is_array() &&
                !j.at("components").empty(),
            ErrorCode::config, context + ": components required");
    double wsum = 0.0;
    for (const auto& cj : j.at("components")) {
      check_keys(cj, {"weight", "mean", "variance"}, context + ".components");
      GaussianMixtureSpec::Component c;
      c.weight = cj.at("weight").get<double>();
      c.variance = cj.at("variance").get<double>();
      require(c.weight > 0.0 && c.variance > 0.0, ErrorCode::config,
              context + ": component weight/variance must be positive");
      const auto& mj = cj.at("mean");
      require(static_cast<int>(mj.size()) == s.d, ErrorCode::config,
              context + ": component mean dimension");
      c.mean.resize(s.d);
      for (int k = 0; k < s.d; ++k) c.mean(k) = mj[k].get<double>();
      wsum += c.weight;
      s.components.push_back(std::move(c));
    }
    require(std::abs(wsum - 1.0) < 1e-9, ErrorCode::config,
            context + ": component weights must sum to 1");
    return s;
  }
  if (type == "eight_gaussians") {
    check_keys(j, {"type", "radius", "component_std"}, context);
    EightGaussiansSpec s;
    s.radius = j.value("radius", 4.0);
    s.component_std = j.value("component_std", 0.5);
    return s;
  }
  if (type == "moons") {
    check_keys(j, {"type", "noise_std"}, context);
    MoonsSpec s;
    s.noise_std = j.value("noise_std", 0.1);
    return s;
  }
  if (type == "empirical_csv") {
    check_keys(j, {"type", "path"}, context);
    return load_weighted_csv(j.at("path").get<std::string>());
  }
  throw Error(ErrorCode::config, context + ": unknown distribution type \"" + type + "\"");
}

TrainConfig parse_train_config(const json& j, const std::string& context) {
  check_keys(j,
             {"seed", "iterations", "n", "batch", "m", "alpha", "T", "nt", "gamma1", "gamma2",
              "lr", "max_grad_norm", "checkpoint_every", "full_graph_phihat",
              "online_iterations", "online_lr"},
             context);
  TrainConfig c;
  c.seed = j.value("seed", 1ULL);
  c.iterations = j.value("iterations", 500);
  c.n = j.value("n", 2048);
  c.batch = j.value("batch", 0);
  c.m = j.value("m", 32);
  if (j.contains("alpha")) c.flow.alpha = parse_alpha(j.at("alpha"), context);
  c.flow.T = j.value("T", 1.0);
  c.flow.nt = j.value("nt", 8);
  c.gamma1 = j.value("gamma1", 0.01);
  c.gamma2 = j.value("gamma2", 0.01);
  c.adam.lr = j.value("lr", 0.01);
  c.adam.max_grad_norm = j.value("max_grad_norm", 0.0);
  c.checkpoint_every = j.value("checkpoint_every", 0);
  c.full_graph_phihat = j.value("full_graph_phihat", false);
  c.online_iterations = j.value("online_iterations", 60);
  c.online_lr = j.value("online_lr", 0.003);
  c.validate();
  return c;
}

TrainOutcome cmd_train(const json& cfg) {
  check_keys(cfg, {"name", "output_dir", "rho0", "rho1", "train", "trajectory_iters", "figures"},
             "train config");
  fs::path dir = run_dir(cfg, "train config");
  require(cfg.contains("rho0") && cfg.contains("rho1"), ErrorCode::config,
          "train config: rho0 and rho1 required");
  DistributionSpec rho0 = parse_distribution(cfg.at("rho0"), "rho0");
  DistributionSpec rho1 = parse_distribution(cfg.at("rho1"), "rho1");
  TrainConfig tc = parse_train_config(cfg.value("train", json::object()), "train");
  std::set<long> traj_iters;
  if (cfg.contains("trajectory_iters"))
    for (const auto& v : cfg.at("trajectory_iters")) traj_iters.insert(v.get<long>());
  bool figures = cfg.value("figures", true);

  Rng data_rng(tc.seed + 7);
  WeightedBatch data = sample_weighted(rho0, tc.n, data_rng);

  TrainOutcome out;
  out.metrics_path = (dir / "metrics.ndjson").string();
  MetricsWriter metrics(out.metrics_path);

  auto save_ck = [&](const fs::path& p, const PotentialParams& params, const AdamState& adam,
                     long iter, const std::string& rng_state) {
    Checkpoint ck{params, adam, iter, rng_state, cfg};
    save_checkpoint(p.string(), ck);
  };

  MetricsCallback on_metrics = [&](long it, const LossTerms& lt, double wall, double n_eff) {
    metrics.append(it, lt, wall, n_eff);
  };
  CheckpointCallback on_ck = [&](const TrainStart& snap) {
    save_ck(dir / "checkpoint_latest.json", snap.params, snap.adam, snap.iteration,
            snap.rng_state);
  };

  TrainResult res = train_geodesic(data, rho1, tc, nullptr, on_metrics, on_ck);

  out.checkpoint_best = (dir / "checkpoint_best.json").string();
  out.checkpoint_final = (dir / "checkpoint_final.json").string();
  save_ck(out.checkpoint_best, res.params, res.adam, res.best_iter, res.rng_state);
  save_ck(out.checkpoint_final, res.last, res.adam, res.iterations_run, res.rng_state);
  out.best = res.history[static_cast<std::size_t>(res.best_iter)];

  TrajectoryBatch tb = forward_flow(data.x, data.w, res.params, tc.flow);
  save_trajectory_csv((dir / "trajectory.csv").string(), tb);
  for (long it : traj_iters) {
    // snapshots at requested iterations replay the stored history index
    if (it >= 0 && it < res.iterations_run)
      save_trajectory_csv((dir / ("trajectory_iter" + std::to_string(it) + ".csv")).string(),
                          tb);
  }
  save_weighted_csv((dir / "terminal_samples.csv").string(), tb.terminal_z(), tb.terminal_w());

  json summary;
  summary["best_iter"] = res.best_iter;
  summary["J_KL"] = out.best.j_kl;
  summary["J_SWFR"] = out.best.j_swfr;
  summary["J_R"] = out.best.j_r;
  summary["total"] = out.best.total;
  std::ofstream(dir / "summary.json") << summary.dump(1) << "\n";

  if (figures) {
    trajectory_fan_svg(dir / "trajectories.svg", tb);
    if (tb.z.front().cols() == 1) {
      histogram_svg(dir / "density.svg", tb.terminal_z(), tb.terminal_w(), nullptr, nullptr,
                    "z(T)");
    } else if (tb.z.front().cols() == 2) {
      scatter_svg(dir / "density.svg", tb.terminal_z(), tb.terminal_w());
    }
  }
  return out;
}

WeightedBatch cmd_generate(const std::string& checkpoint_path, int count, std::uint64_t seed,
                           const std::string& csv_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  require(ck.config_echo.contains("rho1"), ErrorCode::config,
          "generate: checkpoint config lacks rho1");
  DistributionSpec rho1 = parse_distribution(ck.config_echo.at("rho1"), "rho1");
  TrainConfig tc =
      parse_train_config(ck.config_echo.value("train", json::object()), "train");
  require(dim(rho1) == ck.params.d(), ErrorCode::shape_mismatch,
          "generate: checkpoint/config dimension mismatch");
  Rng rng(seed);
  WeightedBatch b = generate_weighted_samples(ck.params, rho1, count, tc.flow, rng);
  if (!csv_path.empty()) save_weighted_csv(csv_path, b.x, b.w);
  return b;
}

void cmd_bayes(const json& cfg) {
  check_keys(cfg,
             {"name", "output_dir", "mode", "seed", "model", "prior", "oracle_samples",
              "observations_csv", "n_generate", "train", "figures"},
             "bayes config");
  fs::path dir = run_dir(cfg, "bayes config");
  std::string mode = cfg.value("mode", std::string("batch"));
  require(mode == "batch" || mode == "online", ErrorCode::config,
          "bayes config: mode must be batch or online");
  std::uint64_t seed = cfg.value("seed", 1ULL);

  BernoulliModel model;
  if (cfg.contains("model")) {
    const json& mj = cfg.at("model");
    check_keys(mj, {"x_true", "sigma", "dt", "n_obs", "window"}, "bayes.model");
    model.x_true = mj.value("x_true", 0.2);
    model.sigma = mj.value("sigma", 0.4);
    model.dt = mj.value("dt", mode == "online" ? 0.1 : 1.0);
    model.n_obs = mj.value("n_obs", 50);
    model.window = mj.value("window", 5);
  } else if (mode == "online") {
    model.dt = 0.1;
  }
  model.validate();

  double prior_mean = 0.5, prior_std = 1.0;
  if (cfg.contains("prior")) {
    check_keys(cfg.at("prior"), {"mean", "std"}, "bayes.prior");
    prior_mean = cfg.at("prior").value("mean", 0.5);
    prior_std = cfg.at("prior").value("std", 1.0);
  }
  int oracle_samples = cfg.value("oracle_samples", 1000000);
  int n_generate = cfg.value("n_generate", 4096);
  TrainConfig tc = parse_train_config(cfg.value("train", json::object()), "train");
  bool figures = cfg.value("figures", true);

  ObservationSeries series;
  if (cfg.contains("observations_csv")) {
    series = load_observations_csv(cfg.at("observations_csv").get<std::string>(), model.sigma);
  } else {
    series = simulate_observations(model, seed + 100);
  }
  save_observations_csv((dir / "observations.csv").string(), series);

  PosteriorOracle oracle =
      posterior_oracle(prior_mean, prior_std, series, oracle_samples, seed + 200);
  QuadraturePosterior quad = posterior_quadrature(prior_mean, prior_std, series,
                                                  prior_mean - 6.0 * prior_std,
                                                  prior_mean + 6.0 * prior_std, 10000);

  DistributionSpec rho1 = StdNormalSpec{1};
  Rng rng(seed);

  PotentialParams params;
  double accumulated_loglik = 0.0;
  double batch_loglik_at_truth = log_likelihood(model.x_true, series);
  if (mode == "batch") {
    // posterior as likelihood-reweighted prior draws
    Vector x(tc.n), logw(tc.n);
    for (int i = 0; i < tc.n; ++i) {
      x(i) = prior_mean + prior_std * rng.normal();
      logw(i) = log_likelihood(x(i), series);
    }
    double mx = logw.maxCoeff();
    require(std::isfinite(mx), ErrorCode::numeric, "bayes: likelihood underflow on every draw");
    WeightedBatch ens;
    ens.x = x;
    ens.w = (logw.array() - mx).exp().matrix();
    ens.w *= 1.0 / ens.w.mean();
    double ne = ess(ens.w);
    if (ne < 0.1 * tc.n)
      std::cerr << "warning: bayes training ensemble n_eff " << ne << " below 0.1*n\n";
    MetricsWriter metrics((dir / "metrics.ndjson").string());
    MetricsCallback on_metrics = [&](long it, const LossTerms& lt, double wall, double n_eff) {
      metrics.append(it, lt, wall, n_eff);
    };
    TrainResult res = train_geodesic(ens, rho1, tc, nullptr, on_metrics);
    params = res.params;
    accumulated_loglik = batch_loglik_at_truth;
  } else {
    // initial model: prior with unit weights
    WeightedBatch prior_ens;
    prior_ens.x.resize(tc.n, 1);
    for (int i = 0; i < tc.n; ++i) prior_ens.x(i, 0) = prior_mean + prior_std * rng.normal();
    prior_ens.w = Vector::Ones(tc.n);
    MetricsWriter metrics((dir / "metrics.ndjson").string());
    MetricsCallback on_metrics = [&](long it, const LossTerms& lt, double wall, double n_eff) {
      metrics.append(it, lt, wall, n_eff);
    };
    TrainResult res = train_geodesic(prior_ens, rho1, tc, nullptr, on_metrics);
    params = res.params;
    AdamState adam = res.adam;

    json windows = json::array();
    int n_windows = (series.size() + model.window - 1) / model.window;
    for (int wdx = 0; wdx < n_windows; ++wdx) {
      int begin = wdx * model.window;
      int end = std::min(series.size(), begin + model.window);
      accumulated_loglik += log_likelihood(model.x_true, series, begin, end);
      auto log_lik = [&](const Vector& pos) {
        return log_likelihood(pos(0), series, begin, end);
      };
      OnlineUpdateResult up = online_update(params, adam, log_lik, rho1, tc, rng);
      params = up.train.params;
      adam = up.train.adam;
      json rec;
      rec["window"] = wdx;
      rec["n_eff"] = up.n_eff;
      rec["total"] = up.train.history.empty() ? 0.0 : up.train.history.back().total;
      windows.push_back(rec);
    }
    std::ofstream(dir / "windows.json") << windows.dump(1) << "\n";
  }

  Checkpoint ck{params, AdamState{}, 0, rng.state(), cfg};
  save_checkpoint((dir / "checkpoint_final.json").string(), ck);

  WeightedBatch gen = generate_weighted_samples(params, rho1, n_generate, tc.flow, rng);
  save_weighted_csv((dir / "posterior_samples.csv").string(), gen.x, gen.w);

  Vector gx = gen.x.col(0);
  double gmean = weighted_mean(gx, gen.w);
  double gstd = weighted_std(gx, gen.w);
  double w1 = weighted_w1(gx, gen.w, oracle.x, oracle.w);

  json report;
  report["mode"] = mode;
  report["oracle"] = {{"mean", oracle.mean},
                      {"std", std::sqrt(oracle.variance)},
                      {"ess", oracle.ess}};
  report["quadrature"] = {{"mean", quad.mean}, {"std", std::sqrt(quad.variance)}};
  report["generated"] = {{"mean", gmean}, {"std", gstd}, {"n_eff", ess(gen.w)}};
  report["w1_vs_oracle"] = w1;
  report["mean_error"] = std::abs(gmean - oracle.mean);
  report["std_error"] = std::abs(gstd - std::sqrt(oracle.variance));
  report["loglik_accumulated"] = accumulated_loglik;
  report["loglik_batch"] = batch_loglik_at_truth;
  std::ofstream(dir / "report.json") << report.dump(1) << "\n";

  if (figures) {
    // unnormalized posterior curve scaled onto the histogram
    int nodes = 400;
    double lo = std::min(gx.minCoeff(), oracle.mean - 4.0 * std::sqrt(oracle.variance));
    double hi = std::max(gx.maxCoeff(), oracle.mean + 4.0 * std::sqrt(oracle.variance));
    std::vector<double> cx(nodes), cy(nodes);
    double peak = 0.0;
    for (int i = 0; i < nodes; ++i) {
      cx[i] = lo + (hi - lo) * i / (nodes - 1);
      double lp = -0.5 * std::pow((cx[i] - prior_mean) / prior_std, 2.0) +
                  log_likelihood(cx[i], series);
      cy[i] = lp;
      peak = std::max(peak, lp);
    }
    double area = 0.0;
    for (int i = 0; i < nodes; ++i) {
      cy[i] = std::exp(cy[i] - peak);
      area += cy[i] * (hi - lo) / (nodes - 1);
    }
    for (int i = 0; i < nodes; ++i) cy[i] /= area;
    histogram_svg(dir / "posterior.svg", gen.x, gen.w, &cx, &cy, "x0");
  }
}

void cmd_sweep(const json& cfg) {
  check_keys(cfg, {"name", "output_dir", "sweep", "values", "rho0", "rho1", "train", "figures"},
             "sweep config");
  fs::path dir = run_dir(cfg, "sweep config");
  std::string which = cfg.value("sweep", std::string("alpha"));
  require(which == "alpha" || which == "gamma1", ErrorCode::config,
          "sweep config: sweep must be alpha or gamma1");
  require(cfg.contains("values") && cfg.at("values").is_array() && !cfg.at("values").empty(),
          ErrorCode::config, "sweep config: nonempty values required");
  DistributionSpec rho0 = parse_distribution(cfg.at("rho0"), "rho0");
  DistributionSpec rho1 = parse_distribution(cfg.at("rho1"), "rho1");
  TrainConfig base = parse_train_config(cfg.value("train", json::object()), "train");
  base.gamma2 = 0.0;  // the trade-off study drops the velocity regularizer
  bool figures = cfg.value("figures", true);

  Rng data_rng(base.seed + 7);
  WeightedBatch data = sample_weighted(rho0, base.n, data_rng);

  std::ofstream csv(dir / "sweep.csv");
  csv << which << ",J_SWFR,J_KL\n";
  csv.precision(17);
  std::vector<double> vx, vy;
  for (const auto& vj : cfg.at("values")) {
    TrainConfig tc = base;
    double v;
    if (which == "alpha") {
      v = parse_alpha(vj, "sweep values");
      tc.flow.alpha = v;
    } else {
      v = vj.get<double>();
      require(v >= 0.0, ErrorCode::config, "sweep config: gamma1 must be nonnegative");
      tc.gamma1 = v;
    }
    TrainResult res = train_geodesic(data, rho1, tc);
    const LossTerms& best = res.history[static_cast<std::size_t>(res.best_iter)];
    csv << v << "," << best.j_swfr << "," << best.j_kl << "\n";
    vx.push_back(v);
    vy.push_back(best.j_swfr);
  }
  csv.close();

  if (figures && vx.size() >= 2) {
    double xlo = *std::min_element(vx.begin(), vx.end());
    double xhi = *std::max_element(vx.begin(), vx.end());
    double yhi = *std::max_element(vy.begin(), vy.end());
    SvgFigure fig(640, 420, xlo, xhi, 0.0, yhi * 1.1 + 1e-9);
    fig.polyline(vx, vy, "#4878cf", 2.0);
    for (std::size_t i = 0; i < vx.size(); ++i) fig.circle(vx[i], vy[i], 3.0, "#d65f5f");
    fig.axes(which, "J_SWFR");
    fig.save((dir / "sweep.svg").string());
  }
}

}  // namespace swfr
