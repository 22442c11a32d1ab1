#pragma once

#include <functional>

#include "swfr/common.hpp"

namespace swfr {

// One-sample weighted Kolmogorov-Smirnov statistic for 1-D samples against a
// reference CDF. Weights are normalized internally.
double weighted_ks(const Vector& x, const Vector& w, const std::function<double(double)>& cdf);

// Two-sample weighted KS over the pooled support.
double weighted_ks2(const Vector& x1, const Vector& w1, const Vector& x2, const Vector& w2);

// Weighted 1-Wasserstein distance between 1-D weighted samples (area between
// empirical CDFs).
double weighted_w1(const Vector& x1, const Vector& w1, const Vector& x2, const Vector& w2);

double weighted_mean(const Vector& x, const Vector& w);
double weighted_std(const Vector& x, const Vector& w);

// Effective sample size (sum w)^2 / sum w^2.
double ess(const Vector& w);

double std_normal_cdf(double x);

}  // namespace swfr
