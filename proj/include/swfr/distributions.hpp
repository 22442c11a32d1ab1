#pragma once

#include <string>
#include <variant>
#include <vector>

#include "swfr/common.hpp"
#include "swfr/rng.hpp"

namespace swfr {

struct StdNormalSpec {
  int d = 1;
};

struct GaussianMixtureSpec {
  struct Component {
    double weight;
    Vector mean;
    double variance;  // isotropic
  };
  int d = 1;
  std::vector<Component> components;
};

struct EightGaussiansSpec {
  double radius = 4.0;
  double component_std = 0.5;
};

struct MoonsSpec {
  double noise_std = 0.1;  // sampler only, no tractable density
};

struct EmpiricalWeightedSpec {
  Matrix x;  // n x d
  Vector w;  // mean-normalized to 1
};

using DistributionSpec = std::variant<StdNormalSpec, GaussianMixtureSpec, EightGaussiansSpec,
                                      MoonsSpec, EmpiricalWeightedSpec>;

int dim(const DistributionSpec& spec);
bool has_density(const DistributionSpec& spec);

// i.i.d. seeded draws (unit weights except EmpiricalWeighted, which resamples
// its own weighted rows uniformly by index -- weights are returned separately
// by sample_weighted).
Matrix sample(const DistributionSpec& spec, int count, Rng& rng);

struct WeightedBatch {
  Matrix x;
  Vector w;  // mean 1
};
WeightedBatch sample_weighted(const DistributionSpec& spec, int count, Rng& rng);

double log_density(const DistributionSpec& spec, const Vector& x);

// The paper's 1-D two-component mixture: weights 1/3 and 2/3 at -3 and +3.
GaussianMixtureSpec mixture_1d();
// EightGaussians lowered to its mixture form (modes on a circle).
GaussianMixtureSpec eight_gaussians_mixture(const EightGaussiansSpec& s);

// CSV with header x0..x{d-1},w; weights renormalized to mean 1.
EmpiricalWeightedSpec load_weighted_csv(const std::string& path);
void save_weighted_csv(const std::string& path, const Matrix& x, const Vector& w);

}  // namespace swfr
