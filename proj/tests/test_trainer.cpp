#include <doctest.h>

#include <cmath>

#include "swfr/stats.hpp"
#include "swfr/trainer.hpp"

using namespace swfr;

namespace {

TrainConfig small_config() {
  TrainConfig tc;
  tc.seed = 3;
  tc.iterations = 50;
  tc.n = 64;
  tc.m = 8;
  tc.flow.alpha = 10.0;
  tc.flow.nt = 4;
  return tc;
}

}  // namespace

TEST_CASE("training between identical normals stays near the zero flow") {
  TrainConfig tc = small_config();
  Rng rng(1);
  WeightedBatch data = sample_weighted(StdNormalSpec{1}, tc.n, rng);
  TrainResult res = train_geodesic(data, StdNormalSpec{1}, tc);
  CHECK(res.history.back().j_swfr <= 0.05);
}

TEST_CASE("loss history is deterministic and best selection consistent") {
  TrainConfig tc = small_config();
  tc.iterations = 10;
  Rng rng(2);
  WeightedBatch data = sample_weighted(mixture_1d(), tc.n, rng);
  TrainResult a = train_geodesic(data, StdNormalSpec{1}, tc);
  TrainResult b = train_geodesic(data, StdNormalSpec{1}, tc);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i].total == b.history[i].total);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : a.history) best = std::min(best, h.total);
  CHECK(a.best_total == best);
}

TEST_CASE("generated weights have mean exactly one") {
  PotentialParams p = init_params(1, 8, 5);
  Rng rng(6);
  FlowConfig cfg;
  cfg.alpha = 10.0;
  WeightedBatch b = generate_weighted_samples(p, StdNormalSpec{1}, 777, cfg, rng);
  CHECK(b.w.mean() == doctest::Approx(1.0).epsilon(1e-15));
  // identity parameters leave weights at one and samples standard normal
  CHECK((b.w.array() - 1.0).abs().maxCoeff() <= 0.05);
  CHECK(std::abs(b.x.col(0).mean()) <= 0.15);
}

TEST_CASE("online update with no new data keeps the model near its fixed point") {
  TrainConfig tc = small_config();
  tc.iterations = 60;
  tc.online_iterations = 20;
  Rng rng(4);
  WeightedBatch data = sample_weighted(StdNormalSpec{1}, tc.n, rng);
  TrainResult base = train_geodesic(data, StdNormalSpec{1}, tc);
  double before = base.history.back().total;

  OnlineUpdateResult up = online_update(base.last, base.adam, {}, StdNormalSpec{1}, tc, rng);
  CHECK((up.ensemble.w.array() > 0.0).all());
  CHECK(up.ensemble.w.mean() == doctest::Approx(1.0).epsilon(1e-12));
  double after = up.train.history.back().total;
  CHECK(std::abs(after - before) <= 0.01 * std::abs(before) + 0.01);
}

TEST_CASE("online update reweights by the likelihood callback") {
  TrainConfig tc = small_config();
  tc.iterations = 5;
  tc.online_iterations = 5;
  Rng rng(8);
  PotentialParams p = init_params(1, tc.m, 5);
  auto log_lik = [](const Vector& x) { return -0.5 * (x(0) - 1.0) * (x(0) - 1.0) / 0.25; };
  OnlineUpdateResult up = online_update(p, AdamState{}, log_lik, StdNormalSpec{1}, tc, rng);
  CHECK(up.ensemble.w.mean() == doctest::Approx(1.0).epsilon(1e-12));
  // mass should move toward x=1
  Vector x = up.ensemble.x.col(0);
  CHECK(weighted_mean(x, up.ensemble.w) > 0.3);
  CHECK(up.n_eff > 1.0);
}

TEST_CASE("training validates inputs") {
  TrainConfig tc = small_config();
  WeightedBatch empty;
  CHECK_THROWS_AS((void)train_geodesic(empty, StdNormalSpec{1}, tc), Error);
  Rng rng(1);
  WeightedBatch data = sample_weighted(StdNormalSpec{2}, 8, rng);
  CHECK_THROWS_AS((void)train_geodesic(data, StdNormalSpec{1}, tc), Error);
  TrainConfig bad = tc;
  bad.iterations = 0;
  WeightedBatch ok = sample_weighted(StdNormalSpec{1}, 8, rng);
  CHECK_THROWS_AS((void)train_geodesic(ok, StdNormalSpec{1}, bad), Error);
}
