#include <doctest.h>

#include <cmath>

#include "swfr/flow.hpp"

using namespace swfr;

namespace {

PotentialParams quadratic_1d() {
  // Phi = x^2 / 2
  PotentialParams p = init_params(1, 4, 0);
  p.A.setZero();
  p.A(0, 0) = 1.0;
  return p;
}

PotentialParams linear_1d() {
  // Phi = x
  PotentialParams p = init_params(1, 4, 0);
  p.b(0) = 1.0;
  return p;
}

PotentialParams random_1d(std::uint64_t seed) {
  PotentialParams p = init_params(1, 8, seed);
  Rng rng(seed + 50);
  Vector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) += 0.3 * rng.normal();
  return PotentialParams::unflatten(flat, 1, 8);
}

}  // namespace

TEST_CASE("identity flow at zero potential") {
  PotentialParams p = init_params(2, 8, 1);
  Rng rng(2);
  Matrix X(12, 2);
  for (int i = 0; i < 24; ++i) X(i / 2, i % 2) = rng.normal();
  Vector w0(12);
  for (int i = 0; i < 12; ++i) w0(i) = 0.5 + rng.uniform();
  w0 *= 1.0 / w0.mean();
  FlowConfig cfg;
  cfg.alpha = 3.0;
  TrajectoryBatch tb = forward_flow(X, w0, p, cfg);
  CHECK((tb.terminal_z() - X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((tb.terminal_w() - w0).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(tb.l.back().cwiseAbs().maxCoeff() == 0.0);
  CHECK(tb.iphi.cwiseAbs().maxCoeff() == 0.0);
  CHECK(tb.iswfr.cwiseAbs().maxCoeff() == 0.0);
  CHECK(tb.ir.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-particle quadratic oracle") {
  FlowConfig cfg;
  cfg.alpha = 1.0;
  cfg.nt = 8;
  Matrix X = Matrix::Constant(1, 1, 1.0);
  TrajectoryBatch tb = forward_flow(X, Vector::Ones(1), quadratic_1d(), cfg);
  CHECK(std::abs(tb.terminal_z()(0, 0) - std::exp(-1.0)) <= 1e-5);
  CHECK(std::abs(tb.l.back()(0) - (-1.0)) <= 1e-5);
  CHECK(tb.terminal_w()(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two-particle logistic weight oracle") {
  FlowConfig cfg;
  cfg.alpha = 1.0;
  cfg.nt = 32;
  Matrix X(2, 1);
  X << 0.0, 2.0;
  TrajectoryBatch tb = forward_flow(X, Vector::Ones(2), linear_1d(), cfg);
  double w1 = tb.terminal_w()(0);
  double w2 = tb.terminal_w()(1);
  CHECK(std::abs(w1 - 2.0 / (1.0 + std::exp(-2.0))) <= 1e-4);
  CHECK(std::abs(w2 - (2.0 - 2.0 / (1.0 + std::exp(-2.0)))) <= 1e-4);
  CHECK(std::abs(tb.terminal_z()(0, 0) - (-1.0)) <= 1e-12);
  CHECK(std::abs(tb.terminal_z()(1, 0) - 1.0) <= 1e-12);
}

TEST_CASE("inverse flow oracles") {
  PotentialParams p0 = init_params(1, 4, 0);
  Matrix Z = Matrix::Constant(3, 1, 0.5);
  FlowConfig cfg;
  cfg.alpha = 2.0;
  TrajectoryBatch idb = inverse_flow(Z, p0, cfg);
  CHECK((idb.terminal_z() - Z).cwiseAbs().maxCoeff() == 0.0);
  CHECK((idb.terminal_w().array() - 1.0).abs().maxCoeff() == 0.0);
  for (double ph : idb.phibar) CHECK(ph == 0.0);

  cfg.nt = 8;
  cfg.alpha = 1.0;
  Matrix Zq = Matrix::Constant(1, 1, 0.3);
  TrajectoryBatch inv = inverse_flow(Zq, quadratic_1d(), cfg);
  CHECK(std::abs(inv.terminal_z()(0, 0) - 0.3 * std::exp(1.0)) <= 1e-5);
}

TEST_CASE("round trip") {
  FlowConfig cfg;
  cfg.alpha = 1.0;
  Matrix X = Matrix::Constant(1, 1, 1.0);

  cfg.nt = 64;
  RoundTripResult r64 = round_trip(X, Vector::Ones(1), quadratic_1d(), cfg);
  CHECK(r64.position_rmse <= 1e-6);

  // forward-leg error against the analytic endpoint decays at fourth order
  std::vector<double> ferr;
  for (int nt : {8, 16, 32, 64}) {
    cfg.nt = nt;
    TrajectoryBatch tb = forward_flow(X, Vector::Ones(1), quadratic_1d(), cfg);
    ferr.push_back(std::abs(tb.terminal_z()(0, 0) - std::exp(-1.0)));
  }
  for (int k = 0; k < 3; ++k) {
    double order = std::log2(ferr[k] / ferr[k + 1]);
    CHECK(order >= 3.5);
    CHECK(order <= 4.5);
  }

  // the symmetric round trip cancels the leading error term, so its decay is
  // at least fourth order
  std::vector<double> rmse;
  for (int nt : {8, 16, 32, 64}) {
    cfg.nt = nt;
    rmse.push_back(round_trip(X, Vector::Ones(1), quadratic_1d(), cfg).position_rmse);
  }
  for (int k = 0; k < 3; ++k) CHECK(rmse[k] / rmse[k + 1] >= 10.0);

  // zero potential round trip is exact
  cfg.nt = 8;
  RoundTripResult r0 = round_trip(X, Vector::Ones(1), init_params(1, 4, 0), cfg);
  CHECK(r0.position_rmse == 0.0);
  CHECK(r0.weight_rmse == 0.0);
}

TEST_CASE("weight invariants on a random potential") {
  Rng rng(77);
  Matrix X(24, 1);
  for (int i = 0; i < 24; ++i) X(i, 0) = rng.normal();
  Vector w0(24);
  for (int i = 0; i < 24; ++i) w0(i) = 0.4 + rng.uniform();
  w0 *= 1.0 / w0.mean();
  FlowConfig cfg;
  cfg.alpha = 2.0;
  TrajectoryBatch tb = forward_flow(X, w0, random_1d(123), cfg);
  for (const auto& w : tb.w) {
    CHECK((w.array() > 0.0).all());
    CHECK(std::abs(w.mean() - 1.0) <= 1e-12);
  }
  CHECK(tb.iswfr.minCoeff() >= 0.0);
  CHECK(tb.ir.minCoeff() >= 0.0);
}

TEST_CASE("single particle keeps weight one") {
  FlowConfig cfg;
  cfg.alpha = 0.5;
  Matrix X = Matrix::Constant(1, 1, -0.7);
  TrajectoryBatch tb = forward_flow(X, Vector::Ones(1), random_1d(321), cfg);
  for (const auto& w : tb.w) CHECK(std::abs(w(0) - 1.0) <= 1e-14);
}

TEST_CASE("constant-velocity case has zero regularizer integral") {
  FlowConfig cfg;
  cfg.alpha = 1.0;
  Matrix X = Matrix::Constant(1, 1, 0.4);
  TrajectoryBatch tb = forward_flow(X, Vector::Ones(1), linear_1d(), cfg);
  CHECK(tb.ir(0) <= 1e-14);
}

TEST_CASE("mean potential examples") {
  // constant potential c with mean-1 weights
  PotentialParams pc = init_params(1, 4, 0);
  pc.c = 3.25;
  Matrix X(2, 1);
  X << -1.0, 2.0;
  Vector w(2);
  w << 1.5, 0.5;
  CHECK(mean_potential(X, w, pc, 0.1) == doctest::Approx(3.25).epsilon(1e-14));

  // Phi = x^2/2 at positions with values (2, 4), weights (1.5, 0.5)
  Matrix Xq(2, 1);
  Xq << 2.0, 2.0 * std::sqrt(2.0);
  CHECK(mean_potential(Xq, w, quadratic_1d(), 0.0) == doctest::Approx(2.5).epsilon(1e-12));

  // single particle forces weight one
  Matrix X1 = Matrix::Constant(1, 1, 2.0);
  CHECK(mean_potential(X1, Vector::Constant(1, 7.0), quadratic_1d(), 0.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("pure transport freezes weights") {
  FlowConfig cfg;
  cfg.alpha = std::numeric_limits<double>::infinity();
  Rng rng(5);
  Matrix X(6, 1);
  for (int i = 0; i < 6; ++i) X(i, 0) = rng.normal();
  Vector w0(6);
  for (int i = 0; i < 6; ++i) w0(i) = 0.5 + rng.uniform();
  w0 *= 1.0 / w0.mean();
  TrajectoryBatch tb = forward_flow(X, w0, random_1d(55), cfg);
  CHECK((tb.terminal_w() - w0).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("config validation") {
  FlowConfig bad;
  bad.alpha = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.alpha = 1.0;
  bad.nt = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
