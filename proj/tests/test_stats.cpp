#include <doctest.h>

#include <cmath>

#include "swfr/rng.hpp"
#include "swfr/stats.hpp"

using namespace swfr;

TEST_CASE("one-sample KS against the matching normal CDF is small") {
  Rng rng(1);
  Vector x(20000), w = Vector::Ones(20000);
  for (int i = 0; i < x.size(); ++i) x(i) = rng.normal();
  CHECK(weighted_ks(x, w, std_normal_cdf) <= 0.02);
  // shifted sample is far
  Vector y = x.array() + 1.0;
  CHECK(weighted_ks(y, w, std_normal_cdf) >= 0.3);
}

TEST_CASE("weighting changes the empirical CDF as expected") {
  // atoms at -1 and 1 with weights 1 and 3 against the standard normal:
  // the largest gap is |0.25 - Phi(1)|, worked out by hand
  Vector x(2), w(2);
  x << -1.0, 1.0;
  w << 1.0, 3.0;
  double want = std::abs(0.25 - std_normal_cdf(1.0));
  CHECK(weighted_ks(x, w, std_normal_cdf) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("two-sample KS on identical weighted samples is zero") {
  Rng rng(2);
  Vector x(100), w(100);
  for (int i = 0; i < 100; ++i) {
    x(i) = rng.normal();
    w(i) = 0.5 + rng.uniform();
  }
  CHECK(weighted_ks2(x, w, x, w) <= 1e-12);
}

TEST_CASE("wasserstein distance of shifted atoms") {
  Vector x1(1), x2(1), w(1);
  x1 << 0.0;
  x2 << 2.5;
  w << 1.0;
  CHECK(weighted_w1(x1, w, x2, w) == doctest::Approx(2.5).epsilon(1e-12));
  // uniform atoms vs the same set is zero
  Vector y(4), v = Vector::Ones(4);
  y << 1.0, 2.0, 3.0, 4.0;
  CHECK(weighted_w1(y, v, y, v) <= 1e-12);
}

TEST_CASE("weighted mean and std") {
  Vector x(3), w(3);
  x << 1.0, 2.0, 4.0;
  w << 1.0, 1.0, 2.0;
  CHECK(weighted_mean(x, w) == doctest::Approx(2.75).epsilon(1e-12));
  double var = (1.0 * 3.0625 + 1.0 * 0.5625 + 2.0 * 1.5625) / 4.0;
  CHECK(weighted_std(x, w) == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
}

TEST_CASE("effective sample size") {
  CHECK(ess(Vector::Ones(10)) == doctest::Approx(10.0).epsilon(1e-12));
  Vector w = Vector::Zero(10);
  w(0) = 5.0;
  CHECK(ess(w) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("input validation") {
  Vector empty;
  CHECK_THROWS_AS((void)ess(empty), Error);
  Vector x(2), w(3);
  CHECK_THROWS_AS((void)weighted_mean(x, w), Error);
}
