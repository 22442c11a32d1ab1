#include "swfr/potential.hpp"

#include <cmath>

namespace swfr {

using namespace ad;

std::size_t PotentialParams::size() const {
  return static_cast<std::size_t>(omega.size() + K0.size() + b0.size() + K1.size() + b1.size() +
                                  A.size() + b.size() + 1);
}

Vector PotentialParams::flatten() const {
  Vector out(size());
  Eigen::Index k = 0;
  auto put_vec = [&](const Vector& v) {
    out.segment(k, v.size()) = v;
    k += v.size();
  };
  auto put_mat = [&](const Matrix& m) {
    // row-major layout
    out.segment(k, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
    k += m.size();
  };
  put_vec(omega);
  put_mat(K0);
  put_vec(b0);
  put_mat(K1);
  put_vec(b1);
  put_mat(A);
  put_vec(b);
  out(k++) = c;
  return out;
}

PotentialParams PotentialParams::unflatten(const Vector& flat, int d, int m) {
  PotentialParams p;
  Eigen::Index k = 0;
  auto take_vec = [&](Eigen::Index n) {
    Vector v = flat.segment(k, n);
    k += n;
    return v;
  };
  auto take_mat = [&](Eigen::Index r, Eigen::Index c) {
    Matrix mm(r, c);
    Eigen::Map<Vector>(mm.data(), mm.size()) = flat.segment(k, r * c);
    k += r * c;
    return mm;
  };
  p.omega = take_vec(m);
  p.K0 = take_mat(m, d + 1);
  p.b0 = take_vec(m);
  p.K1 = take_mat(m, m);
  p.b1 = take_vec(m);
  p.A = take_mat(d, d + 1);
  p.b = take_vec(d + 1);
  p.c = flat(k++);
  require(k == flat.size(), ErrorCode::shape_mismatch, "unflatten: size mismatch");
  return p;
}

PotentialParams init_params(int d, int m, std::uint64_t seed) {
  require(d >= 1 && m >= 1, ErrorCode::invalid_argument, "init_params: d, m must be >= 1");
  PotentialParams p;
  p.omega = Vector::Zero(m);
  p.b0 = Vector::Zero(m);
  p.b1 = Vector::Zero(m);
  p.A = Matrix::Zero(d, d + 1);
  p.b = Vector::Zero(d + 1);
  p.c = 0.0;
  const double s0 = 1.0 / std::sqrt(static_cast<double>(m));
  Rng rng(seed);
  p.K0.resize(m, d + 1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d + 1; ++j) p.K0(i, j) = rng.uniform(-s0, s0);
  p.K1.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) p.K1(i, j) = rng.uniform(-s0, s0);
  return p;
}

ThetaNodes theta_leaves(Tape& t, const PotentialParams& p, bool requires_grad) {
  ThetaNodes th;
  th.d = p.d();
  th.m = p.m();
  th.omega_row = t.leaf(p.omega.transpose(), requires_grad);
  th.K0 = t.leaf(p.K0, requires_grad);
  th.b0_row = t.leaf(p.b0.transpose(), requires_grad);
  th.K1 = t.leaf(p.K1, requires_grad);
  th.b1_row = t.leaf(p.b1.transpose(), requires_grad);
  th.A = t.leaf(p.A, requires_grad);
  th.b_col = t.leaf(p.b, requires_grad);
  Matrix cc(1, 1);
  cc(0, 0) = p.c;
  th.c = t.leaf(cc, requires_grad);
  return th;
}

Vector gather_theta_grad(Tape& t, const ThetaNodes& th) {
  PotentialParams g;
  g.omega = t.grad(th.omega_row).transpose();
  g.K0 = t.grad(th.K0);
  g.b0 = t.grad(th.b0_row).transpose();
  g.K1 = t.grad(th.K1);
  g.b1 = t.grad(th.b1_row).transpose();
  g.A = t.grad(th.A);
  g.b = t.grad(th.b_col);
  g.c = t.grad(th.c)(0, 0);
  return g.flatten();
}

PhiEval potential_batch(Tape& t, const ThetaNodes& th, Var z, double time, bool need_grad,
                        bool need_trace) {
  const int d = th.d;
  require(t.val(z).cols() == d, ErrorCode::shape_mismatch, "potential_batch: z must be n x d");

  Var S = append_const_col(t, z, time);                       // n x (d+1)
  Var A0 = add_rowvec(t, matmul_nt(t, S, th.K0), th.b0_row);  // n x m
  Var U0 = act_sigma(t, A0);
  Var A1 = add_rowvec(t, matmul_nt(t, U0, th.K1), th.b1_row);  // n x m
  Var U1 = act_sigma(t, A1);
  Var N = add(t, U0, U1);

  Var resnet = matmul_nt(t, N, th.omega_row);  // n x 1
  Var SA = matmul_nt(t, S, th.A);              // n x r
  Var quad = scalar_mul(t, rowsqnorm(t, SA), 0.5);
  Var lin = matmul(t, S, th.b_col);  // n x 1

  PhiEval out;
  out.phi = add_scalar(t, add(t, add(t, resnet, quad), lin), th.c);

  Var H0, H1;
  if (need_grad || need_trace) {
    H0 = tanh(t, A0);
    H1 = tanh(t, A1);
  }

  if (need_grad) {
    // z1 = omega + K1^T (h1 .* omega), rowwise
    Var Z1 = add_rowvec(t, matmul(t, mul_rowvec(t, H1, th.omega_row), th.K1), th.omega_row);
    Var G = matmul(t, mul(t, H0, Z1), th.K0);  // n x (d+1), ResNet part
    G = add(t, G, matmul(t, SA, th.A));        // + (A^T A) s rowwise
    G = add_rowvec(t, G, transpose(t, th.b_col));
    out.gradx = colslice(t, G, 0, d);
  }

  if (need_trace) {
    Var K0s = colslice(t, th.K0, 0, d);     // m x d, spatial columns
    Var K0s2 = rowsqnorm(t, K0s);           // m x 1
    Var Z1 = add_rowvec(t, matmul(t, mul_rowvec(t, H1, th.omega_row), th.K1), th.omega_row);
    Var ones_nm = constant(t, Matrix::Ones(t.val(H0).rows(), th.m));
    Var D0 = sub(t, ones_nm, mul(t, H0, H0));  // 1 - h0^2
    Var term1 = matmul(t, mul(t, D0, Z1), K0s2);  // n x 1
    Var D1 = sub(t, ones_nm, mul(t, H1, H1));
    Var acoef = mul_rowvec(t, D1, th.omega_row);  // (1-h1^2) .* omega
    Var term2 = resnet_trace_quad(t, acoef, H0, th.K1, K0s);
    Var quad_tr = sqnorm(t, colslice(t, th.A, 0, d));  // tr of spatial block of A^T A
    out.trace = add_scalar(t, add(t, term1, term2), quad_tr);
  }
  return out;
}

namespace {
PhiEval scratch_eval(Tape& t, const Vector& x, double time, const PotentialParams& p,
                     bool need_grad_full, bool need_trace, Var* grad_full_out) {
  ThetaNodes th = theta_leaves(t, p, false);
  Var z = t.leaf(x.transpose(), false);
  if (!need_grad_full) return potential_batch(t, th, z, time, false, need_trace);
  // full (d+1)-gradient path: rebuild the gradient without slicing
  PhiEval pe = potential_batch(t, th, z, time, false, need_trace);
  Var S = append_const_col(t, z, time);
  Var A0 = add_rowvec(t, matmul_nt(t, S, th.K0), th.b0_row);
  Var U0 = act_sigma(t, A0);
  Var A1 = add_rowvec(t, matmul_nt(t, U0, th.K1), th.b1_row);
  Var H0 = tanh(t, A0);
  Var H1 = tanh(t, A1);
  Var Z1 = add_rowvec(t, matmul(t, mul_rowvec(t, H1, th.omega_row), th.K1), th.omega_row);
  Var G = matmul(t, mul(t, H0, Z1), th.K0);
  G = add(t, G, matmul(t, matmul_nt(t, S, th.A), th.A));
  G = add_rowvec(t, G, transpose(t, th.b_col));
  *grad_full_out = G;
  return pe;
}
}  // namespace

double eval_phi(const Vector& x, double time, const PotentialParams& p) {
  Tape t;
  PhiEval pe = scratch_eval(t, x, time, p, false, false, nullptr);
  return t.val(pe.phi)(0, 0);
}

Vector grad_phi(const Vector& x, double time, const PotentialParams& p) {
  Tape t;
  Var g;
  scratch_eval(t, x, time, p, true, false, &g);
  return t.val(g).row(0).transpose();
}

double trace_hessian(const Vector& x, double time, const PotentialParams& p) {
  Tape t;
  PhiEval pe = scratch_eval(t, x, time, p, false, true, nullptr);
  return t.val(pe.trace)(0, 0);
}

}  // namespace swfr
