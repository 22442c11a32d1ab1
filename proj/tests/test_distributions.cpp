#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "swfr/distributions.hpp"

using namespace swfr;

TEST_CASE("standard normal sampling moments") {
  Rng rng(1);
  Matrix x = sample(DistributionSpec{StdNormalSpec{1}}, 1000000, rng);
  double mean = x.col(0).mean();
  double var = (x.col(0).array() - mean).square().mean();
  CHECK(std::abs(mean) <= 0.005);
  CHECK(std::abs(var - 1.0) <= 0.01);
}

TEST_CASE("mixture sampling mean") {
  Rng rng(2);
  Matrix x = sample(DistributionSpec{mixture_1d()}, 1000000, rng);
  CHECK(std::abs(x.col(0).mean() - 1.0) <= 0.01);
}

TEST_CASE("sampling determinism") {
  Rng a(7), b(7);
  Matrix xa = sample(DistributionSpec{mixture_1d()}, 500, a);
  Matrix xb = sample(DistributionSpec{mixture_1d()}, 500, b);
  CHECK((xa - xb).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("log density values") {
  Vector zero1 = Vector::Zero(1);
  CHECK(log_density(StdNormalSpec{1}, zero1) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));
  Vector zero3 = Vector::Zero(3);
  CHECK(log_density(StdNormalSpec{3}, zero3) ==
        doctest::Approx(-3.0 * 0.9189385332046727).epsilon(1e-12));
  Vector three = Vector::Constant(1, 3.0);
  CHECK(log_density(mixture_1d(), three) == doctest::Approx(-1.32439).epsilon(1e-4));
}

TEST_CASE("density-free specs reject log_density") {
  Vector x = Vector::Zero(2);
  CHECK_THROWS_AS((void)log_density(MoonsSpec{}, x), Error);
  CHECK(!has_density(MoonsSpec{}));
  CHECK(has_density(EightGaussiansSpec{}));
}

TEST_CASE("densities integrate to one") {
  for (DistributionSpec spec :
       {DistributionSpec{StdNormalSpec{1}}, DistributionSpec{mixture_1d()}}) {
    const int n = 10000;  // composite Simpson on [-12, 12], n even
    const double lo = -12.0, hi = 12.0, h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      double xi = lo + i * h;
      double f = std::exp(log_density(spec, Vector::Constant(1, xi)));
      double coef = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += coef * f;
    }
    acc *= h / 3.0;
    CHECK(std::abs(acc - 1.0) <= 1e-6);
  }
}

TEST_CASE("sample matches density via empirical CDF") {
  DistributionSpec spec = mixture_1d();
  Rng rng(11);
  Matrix x = sample(spec, 100000, rng);
  std::vector<double> xs(x.col(0).data(), x.col(0).data() + x.rows());
  std::sort(xs.begin(), xs.end());
  // numeric CDF by trapezoid accumulation over a fine grid
  const int n = 24000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / n;
  std::vector<double> cdf(n + 1, 0.0);
  double prev = std::exp(log_density(spec, Vector::Constant(1, lo)));
  for (int i = 1; i <= n; ++i) {
    double f = std::exp(log_density(spec, Vector::Constant(1, lo + i * h)));
    cdf[i] = cdf[i - 1] + 0.5 * (prev + f) * h;
    prev = f;
  }
  double sup = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    int i = std::clamp(static_cast<int>((xs[k] - lo) / h), 0, n);
    double emp = static_cast<double>(k + 1) / xs.size();
    sup = std::max(sup, std::abs(emp - cdf[i]));
  }
  CHECK(sup <= 0.01);
}

TEST_CASE("eight gaussians geometry") {
  GaussianMixtureSpec m = eight_gaussians_mixture(EightGaussiansSpec{});
  REQUIRE(m.components.size() == 8);
  for (const auto& c : m.components) {
    CHECK(c.mean.norm() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(c.weight == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(std::sqrt(c.variance) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("weighted csv round-trip and validation") {
  const char* path = "test_weighted_tmp.csv";
  {
    std::ofstream f(path);
    f << "x0,w\n1.0,3.0\n2.0,1.0\n";
  }
  EmpiricalWeightedSpec e = load_weighted_csv(path);
  CHECK(e.w(0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(e.w(1) == doctest::Approx(0.5).epsilon(1e-12));
  std::remove(path);

  {
    std::ofstream f(path);
    f << "x0,w\n1.0,2.0\n2.0,2.0\n";
  }
  e = load_weighted_csv(path);
  CHECK(e.w(0) == 1.0);
  CHECK(e.w(1) == 1.0);
  std::remove(path);

  {
    std::ofstream f(path);
    f << "x0,w\n1.0,1.0\n2.0,-1.0\n";
  }
  bool named_row = false;
  try {
    load_weighted_csv(path);
  } catch (const Error& err) {
    named_row = std::string(err.what()).find("row 2") != std::string::npos;
  }
  CHECK(named_row);
  std::remove(path);
}

TEST_CASE("moons sampler stays in the expected band") {
  Rng rng(3);
  Matrix x = sample(DistributionSpec{MoonsSpec{}}, 2000, rng);
  CHECK(x.col(0).minCoeff() > -2.0);
  CHECK(x.col(0).maxCoeff() < 3.0);
  CHECK(x.col(1).minCoeff() > -2.0);
  CHECK(x.col(1).maxCoeff() < 2.0);
}
