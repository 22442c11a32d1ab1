#pragma once

#include "swfr/common.hpp"
#include "swfr/rng.hpp"
#include "swfr/tape.hpp"

namespace swfr {

// Trainable space-time potential
//   Phi(s;theta) = omega^T N(s) + 1/2 s^T (A^T A) s + b^T s + c,
//   N(s) = u0 + sigma(K1 u0 + b1), u0 = sigma(K0 s + b0),  s = (x, t).
struct PotentialParams {
  Vector omega;  // m
  Matrix K0;     // m x (d+1)
  Vector b0;     // m
  Matrix K1;     // m x m
  Vector b1;     // m
  Matrix A;      // r x (d+1), r = d
  Vector b;      // d+1
  double c = 0.0;

  int d() const { return static_cast<int>(K0.cols()) - 1; }
  int m() const { return static_cast<int>(K0.rows()); }
  std::size_t size() const;
  Vector flatten() const;
  static PotentialParams unflatten(const Vector& flat, int d, int m);
};

// omega=0, A=0, b=0, c=0 and K0, K1 ~ U[-1/sqrt(m), 1/sqrt(m)], so Phi == 0
// and the initial flow is the identity.
PotentialParams init_params(int d, int m, std::uint64_t seed);

// Tape-resident parameter leaves (requires_grad on unless frozen).
struct ThetaNodes {
  ad::Var omega_row;  // 1 x m
  ad::Var K0;         // m x (d+1)
  ad::Var b0_row;     // 1 x m
  ad::Var K1;         // m x m
  ad::Var b1_row;     // 1 x m
  ad::Var A;          // r x (d+1)
  ad::Var b_col;      // (d+1) x 1
  ad::Var c;          // 1 x 1
  int d = 0;
  int m = 0;
};

ThetaNodes theta_leaves(ad::Tape& t, const PotentialParams& p, bool requires_grad);

// Gradient of the scalar total-loss tape w.r.t. the leaves, flattened in the
// same order as PotentialParams::flatten().
Vector gather_theta_grad(ad::Tape& t, const ThetaNodes& th);

struct PhiEval {
  ad::Var phi;    // n x 1
  ad::Var gradx;  // n x d (spatial gradient), only if requested
  ad::Var trace;  // n x 1 (trace of spatial Hessian), only if requested
};

// Batched Phi / spatial gradient / spatial Hessian trace at time t for a
// batch of positions z (n x d). All in closed form on the tape.
PhiEval potential_batch(ad::Tape& t, const ThetaNodes& th, ad::Var z, double time,
                        bool need_grad, bool need_trace);

// Scalar conveniences evaluated on a scratch tape.
double eval_phi(const Vector& x, double time, const PotentialParams& p);
Vector grad_phi(const Vector& x, double time, const PotentialParams& p);  // length d+1
double trace_hessian(const Vector& x, double time, const PotentialParams& p);

}  // namespace swfr
