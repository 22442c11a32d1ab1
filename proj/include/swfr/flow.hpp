#pragma once

#include <cmath>
#include <vector>

#include "swfr/potential.hpp"

namespace swfr {

struct FlowConfig {
  double alpha = 10.0;  // source coefficient; +inf selects pure transport
  double T = 1.0;
  int nt = 8;  // equidistant RK4 steps

  bool pure_transport() const { return std::isinf(alpha); }
  void validate() const {
    require(alpha > 0.0, ErrorCode::invalid_argument, "FlowConfig: alpha must be positive");
    require(T > 0.0, ErrorCode::invalid_argument, "FlowConfig: T must be positive");
    require(nt >= 1, ErrorCode::invalid_argument, "FlowConfig: nt must be >= 1");
  }
};

// Snapshot of a whole integrated batch on the time grid. Weights are
// renormalized to mean 1 after every full RK4 step.
struct TrajectoryBatch {
  std::vector<double> tgrid;   // nt+1 physical times
  std::vector<Matrix> z;       // per grid point, n x d
  std::vector<Vector> w;       // per grid point, mean-1 weights
  std::vector<Vector> l;       // per grid point, log-det (forward only)
  std::vector<double> phibar;  // ensemble mean potential per grid point
  Vector w0;
  Vector iphi, iswfr, ir;  // terminal running integrals (forward only)

  int n() const { return z.empty() ? 0 : static_cast<int>(z.front().rows()); }
  const Matrix& terminal_z() const { return z.back(); }
  const Vector& terminal_w() const { return w.back(); }
};

// Tape handles for the differentiable (training) path.
struct FlowNodes {
  std::vector<ad::Var> z_grid, u_grid;  // per grid point
  ad::Var l, iphi, iswfr, ir;           // n x 1 at T (forward)
  std::vector<ad::Var> phi_mean;        // 1x1 ensemble mean potential per grid point
};

FlowNodes forward_flow_tape(ad::Tape& t, const ThetaNodes& th, const Matrix& X, const Vector& w0,
                            const FlowConfig& cfg);
// Inverse system integrated from rho1 draws; initial weights default to 1.
FlowNodes inverse_flow_tape(ad::Tape& t, const ThetaNodes& th, const Matrix& Zhat,
                            const Vector& w0, const FlowConfig& cfg);

// (1/n) sum_i w_i Phi(z_i, t); weights are expected mean-normalized.
double mean_potential(const Matrix& positions, const Vector& weights, const PotentialParams& p,
                      double time);

// Value-only integration (fresh scratch tape per step, bounded memory).
TrajectoryBatch forward_flow(const Matrix& X, const Vector& w0, const PotentialParams& p,
                             const FlowConfig& cfg);
TrajectoryBatch inverse_flow(const Matrix& Zhat, const PotentialParams& p, const FlowConfig& cfg,
                             const Vector* w0 = nullptr);

struct RoundTripResult {
  double position_rmse = 0.0;
  double weight_rmse = 0.0;
};

// Forward then inverse with identical settings; the inverse leg starts from
// the forward terminal state. Weight RMSE is taken after rescaling the
// recovered weights to mean 1.
RoundTripResult round_trip(const Matrix& X, const Vector& w0, const PotentialParams& p,
                           const FlowConfig& cfg);

}  // namespace swfr
