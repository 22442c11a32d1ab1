#pragma once

#include <string>
#include <vector>

#include "swfr/common.hpp"
#include "swfr/rng.hpp"

namespace swfr {

struct BernoulliModel {
  double x_true = 0.2;
  double sigma = 0.4;     // observation noise std
  double dt = 1.0;        // observation interval (0.1 online)
  int n_obs = 50;         // batch horizon
  int window = 5;         // online window size m

  void validate() const {
    require(sigma > 0.0, ErrorCode::invalid_argument, "BernoulliModel: sigma must be positive");
    require(dt > 0.0, ErrorCode::invalid_argument, "BernoulliModel: dt must be positive");
    require(n_obs >= 0, ErrorCode::invalid_argument, "BernoulliModel: n_obs must be >= 0");
  }
};

struct ObservationSeries {
  std::vector<double> times;   // strictly increasing
  std::vector<double> values;
  double sigma = 0.4;

  int size() const { return static_cast<int>(times.size()); }
};

// Solution of v' = v - v^3 with v(0)=x: G(x,t) = x (x^2 + (1-x^2) e^{-2t})^{-1/2}.
double bernoulli_solve(double x, double t);

ObservationSeries simulate_observations(const BernoulliModel& m, std::uint64_t seed);

// Gaussian log-likelihood of x0 over series indices [begin, end); empty
// window gives 0.
double log_likelihood(double x0, const ObservationSeries& series, int begin, int end);
double log_likelihood(double x0, const ObservationSeries& series);  // full series

struct PosteriorOracle {
  Vector x;        // prior draws
  Vector w;        // self-normalized weights (sum 1)
  double mean = 0.0;
  double variance = 0.0;
  double ess = 0.0;
};

// Self-normalized importance sampling from the N(prior_mean, prior_std^2)
// prior with the full-series likelihood.
PosteriorOracle posterior_oracle(double prior_mean, double prior_std,
                                 const ObservationSeries& series, int count, std::uint64_t seed);

// Grid-quadrature cross-check over [lo, hi] (d=1 only).
struct QuadraturePosterior {
  double mean = 0.0;
  double variance = 0.0;
};
QuadraturePosterior posterior_quadrature(double prior_mean, double prior_std,
                                         const ObservationSeries& series, double lo, double hi,
                                         int nodes);

void save_observations_csv(const std::string& path, const ObservationSeries& s);
ObservationSeries load_observations_csv(const std::string& path, double sigma);

}  // namespace swfr
