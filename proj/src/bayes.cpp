#include "swfr/bayes.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace swfr {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

double bernoulli_solve(double x, double t) {
  return x / std::sqrt(x * x + (1.0 - x * x) * std::exp(-2.0 * t));
}

ObservationSeries simulate_observations(const BernoulliModel& m, std::uint64_t seed) {
  m.validate();
  Rng rng(seed);
  ObservationSeries s;
  s.sigma = m.sigma;
  s.times.reserve(m.n_obs);
  s.values.reserve(m.n_obs);
  for (int n = 1; n <= m.n_obs; ++n) {
    double t = n * m.dt;
    s.times.push_back(t);
    s.values.push_back(bernoulli_solve(m.x_true, t) + m.sigma * rng.normal());
  }
  return s;
}

double log_likelihood(double x0, const ObservationSeries& series, int begin, int end) {
  require(begin >= 0 && end <= series.size() && begin <= end, ErrorCode::invalid_argument,
          "log_likelihood: bad window");
  double acc = 0.0;
  const double s2 = series.sigma * series.sigma;
  for (int n = begin; n < end; ++n) {
    double r = series.values[n] - bernoulli_solve(x0, series.times[n]);
    acc += -0.5 * (kLog2Pi + std::log(s2)) - r * r / (2.0 * s2);
  }
  return acc;
}

double log_likelihood(double x0, const ObservationSeries& series) {
  return log_likelihood(x0, series, 0, series.size());
}

PosteriorOracle posterior_oracle(double prior_mean, double prior_std,
                                 const ObservationSeries& series, int count, std::uint64_t seed) {
  require(count >= 10000, ErrorCode::invalid_argument,
          "posterior_oracle: need at least 1e4 samples");
  require(prior_std > 0.0, ErrorCode::invalid_argument, "posterior_oracle: prior std");
  Rng rng(seed);
  PosteriorOracle out;
  out.x.resize(count);
  Vector logw(count);
  for (int i = 0; i < count; ++i) {
    out.x(i) = prior_mean + prior_std * rng.normal();
    logw(i) = log_likelihood(out.x(i), series);
  }
  double mx = logw.maxCoeff();
  out.w = (logw.array() - mx).exp().matrix();
  out.w /= out.w.sum();
  out.mean = out.x.dot(out.w);
  out.variance = ((out.x.array() - out.mean).square() * out.w.array()).sum();
  out.ess = 1.0 / out.w.squaredNorm();
  require(out.ess >= 100.0, ErrorCode::numeric,
          "posterior_oracle: effective sample size collapsed, raise the sample count");
  return out;
}

QuadraturePosterior posterior_quadrature(double prior_mean, double prior_std,
                                         const ObservationSeries& series, double lo, double hi,
                                         int nodes) {
  require(nodes >= 2 && hi > lo, ErrorCode::invalid_argument, "posterior_quadrature: bad grid");
  const double h = (hi - lo) / (nodes - 1);
  Vector x(nodes), logp(nodes);
  for (int i = 0; i < nodes; ++i) {
    x(i) = lo + i * h;
    double lp = -0.5 * std::pow((x(i) - prior_mean) / prior_std, 2.0);
    logp(i) = lp + log_likelihood(x(i), series);
  }
  double mx = logp.maxCoeff();
  Vector p = (logp.array() - mx).exp().matrix();
  // trapezoid normalization; endpoints half-weighted
  Vector qw = Vector::Ones(nodes);
  qw(0) = qw(nodes - 1) = 0.5;
  double z = (p.array() * qw.array()).sum();
  QuadraturePosterior out;
  out.mean = (x.array() * p.array() * qw.array()).sum() / z;
  out.variance = ((x.array() - out.mean).square() * p.array() * qw.array()).sum() / z;
  return out;
}

void save_observations_csv(const std::string& path, const ObservationSeries& s) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "save_observations_csv: cannot open " + path);
  out << "t,D\n";
  out.precision(17);
  for (int i = 0; i < s.size(); ++i) out << s.times[i] << "," << s.values[i] << "\n";
}

ObservationSeries load_observations_csv(const std::string& path, double sigma) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "load_observations_csv: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "t,D", ErrorCode::config,
          "load_observations_csv: expected header t,D");
  ObservationSeries s;
  s.sigma = sigma;
  double prev = -std::numeric_limits<double>::infinity();
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::stringstream ss(line);
    std::string a, b;
    require(static_cast<bool>(std::getline(ss, a, ',')) && static_cast<bool>(std::getline(ss, b)),
            ErrorCode::io, "load_observations_csv: bad row " + std::to_string(row));
    double t = std::stod(a);
    require(t > prev, ErrorCode::invalid_argument,
            "load_observations_csv: times must be strictly increasing at row " +
                std::to_string(row));
    prev = t;
    s.times.push_back(t);
    s.values.push_back(std::stod(b));
  }
  return s;
}

}  // namespace swfr
