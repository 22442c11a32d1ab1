#include "swfr/tape.hpp"

#include <cmath>

namespace swfr::ad {

namespace {

void check_finite(const Matrix& v, const char* op) {
  // full scans on every large intermediate are a measurable fraction of a
  // training step; non-finite values propagate to the scalar loss and the
  // gradient, both of which are checked, so only small results are scanned
  if (v.size() <= 64 && !v.allFinite())
    throw Error(ErrorCode::non_finite, std::string("non-finite result in op ") + op);
}

inline void shape_eq(const Matrix& a, const Matrix& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::shape_mismatch,
          std::string("shape mismatch in ") + op);
}

}  // namespace

Var Tape::leaf(Matrix v, bool requires_grad) {
  check_finite(v, "leaf");
  nodes_.push_back(Node{std::move(v), {}, requires_grad, nullptr});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::make(Matrix v, bool requires_grad, std::function<void(Tape&, Var)> bp, const char* op) {
  check_finite(v, op);
  nodes_.push_back(Node{std::move(v), {}, requires_grad, requires_grad ? std::move(bp) : nullptr});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix& Tape::grad_accum(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  require(root.valid() && root.id < static_cast<int>(nodes_.size()), ErrorCode::invalid_argument,
          "backward: invalid root");
  const Node& r = nodes_[root.id];
  require(r.value.rows() == 1 && r.value.cols() == 1, ErrorCode::invalid_argument,
          "backward: root must be scalar");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  grad_accum(root)(0, 0) = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backprop) continue;
    if (n.grad.size() == 0) continue;  // gradient never reached this node
    n.backprop(*this, Var{i});
  }
}

namespace {
inline bool rg(Tape& t, Var a) { return t.requires_grad(a); }
inline bool rg2(Tape& t, Var a, Var b) { return t.requires_grad(a) || t.requires_grad(b); }
inline void acc(Tape& t, Var target, const Matrix& delta) {
  if (t.requires_grad(target)) t.grad_accum(target) += delta;
}
}  // namespace

Var constant(Tape& t, Matrix v) { return t.leaf(std::move(v), false); }

Var add(Tape& t, Var a, Var b) {
  shape_eq(t.val(a), t.val(b), "add");
  return t.make(t.val(a) + t.val(b), rg2(t, a, b),
                [a, b](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  acc(tp, a, g);
                  acc(tp, b, g);
                },
                "add");
}

Var sub(Tape& t, Var a, Var b) {
  shape_eq(t.val(a), t.val(b), "sub");
  return t.make(t.val(a) - t.val(b), rg2(t, a, b),
                [a, b](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  acc(tp, a, g);
                  acc(tp, b, -g);
                },
                "sub");
}

Var mul(Tape& t, Var a, Var b) {
  shape_eq(t.val(a), t.val(b), "mul");
  return t.make(t.val(a).cwiseProduct(t.val(b)), rg2(t, a, b),
                [a, b](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  acc(tp, a, g.cwiseProduct(tp.val(b)));
                  acc(tp, b, g.cwiseProduct(tp.val(a)));
                },
                "mul");
}

Var scalar_mul(Tape& t, Var a, double k) {
  return t.make(t.val(a) * k, rg(t, a),
                [a, k](Tape& tp, Var self) { acc(tp, a, tp.grad_accum(self) * k); },
                "scalar_mul");
}

Var matmul(Tape& t, Var a, Var b) {
  require(t.val(a).cols() == t.val(b).rows(), ErrorCode::shape_mismatch, "shape mismatch in matmul");
  return t.make(t.val(a) * t.val(b), rg2(t, a, b),
                [a, b](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  acc(tp, a, g * tp.val(b).transpose());
                  acc(tp, b, tp.val(a).transpose() * g);
                },
                "matmul");
}

Var matmul_nt(Tape& t, Var a, Var b) {
  require(t.val(a).cols() == t.val(b).cols(), ErrorCode::shape_mismatch, "shape mismatch in matmul_nt");
  return t.make(t.val(a) * t.val(b).transpose(), rg2(t, a, b),
                [a, b](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  acc(tp, a, g * tp.val(b));
                  acc(tp, b, g.transpose() * tp.val(a));
                },
                "matmul_nt");
}

Var transpose(Tape& t, Var a) {
  return t.make(t.val(a).transpose(), rg(t, a),
                [a](Tape& tp, Var self) { acc(tp, a, tp.grad_accum(self).transpose()); },
                "transpose");
}

Var sum(Tape& t, Var a) {
  Matrix v(1, 1);
  v(0, 0) = t.val(a).sum();
  return t.make(std::move(v), rg(t, a),
                [a](Tape& tp, Var self) {
                  double g = tp.grad_accum(self)(0, 0);
                  acc(tp, a, Matrix::Constant(tp.val(a).rows(), tp.val(a).cols(), g));
                },
                "sum");
}

Var mean(Tape& t, Var a) {
  const double inv = 1.0 / static_cast<double>(t.val(a).size());
  Matrix v(1, 1);
  v(0, 0) = t.val(a).sum() * inv;
  return t.make(std::move(v), rg(t, a),
                [a, inv](Tape& tp, Var self) {
                  double g = tp.grad_accum(self)(0, 0) * inv;
                  acc(tp, a, Matrix::Constant(tp.val(a).rows(), tp.val(a).cols(), g));
                },
                "mean");
}

Var sqnorm(Tape& t, Var a) {
  Matrix v(1, 1);
  v(0, 0) = t.val(a).squaredNorm();
  return t.make(std::move(v), rg(t, a),
                [a](Tape& tp, Var self) {
                  double g = tp.grad_accum(self)(0, 0);
                  acc(tp, a, 2.0 * g * tp.val(a));
                },
                "sqnorm");
}

Var rowsum(Tape& t, Var a) {
  Matrix v = t.val(a).rowwise().sum();
  return t.make(std::move(v), rg(t, a),
                [a](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);  // n x 1
                  acc(tp, a, g * Matrix::Ones(1, tp.val(a).cols()));
                },
                "rowsum");
}

Var rowsqnorm(Tape& t, Var a) {
  Matrix v = t.val(a).rowwise().squaredNorm();
  return t.make(std::move(v), rg(t, a),
                [a](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);  // n x 1
                  Matrix d = 2.0 * tp.val(a);
                  d.array().colwise() *= g.col(0).array();
                  acc(tp, a, d);
                },
                "rowsqnorm");
}

Var exp(Tape& t, Var a) {
  Matrix v = t.val(a).array().exp().matrix();
  return t.make(std::move(v), rg(t, a),
                [a](Tape& tp, Var self) {
                  acc(tp, a, tp.grad_accum(self).cwiseProduct(tp.val(self)));
                },
                "exp");
}

Var log(Tape& t, Var a) {
  Matrix v = t.val(a).array().log().matrix();
  return t.make(std::move(v), rg(t, a),
                [a](Tape& tp, Var self) {
                  acc(tp, a, tp.grad_accum(self).cwiseQuotient(tp.val(a)));
                },
                "log");
}

Var tanh(Tape& t, Var a) {
  Matrix v = t.val(a).array().tanh().matrix();
  return t.make(std::move(v), rg(t, a),
                [a](Tape& tp, Var self) {
                  const Matrix& y = tp.val(self);
                  Matrix d = (1.0 - y.array().square()).matrix();
                  acc(tp, a, tp.grad_accum(self).cwiseProduct(d));
                },
                "tanh");
}

Var act_sigma(Tape& t, Var a) {
  Matrix v = (t.val(a).array().abs() + (-2.0 * t.val(a).array().abs()).exp().log1p()).matrix();
  return t.make(std::move(v), rg(t, a),
                [a](Tape& tp, Var self) {
                  Matrix d = tp.val(a).array().tanh().matrix();
                  acc(tp, a, tp.grad_accum(self).cwiseProduct(d));
                },
                "act_sigma");
}

Var add_rowvec(Tape& t, Var a, Var r) {
  require(t.val(r).rows() == 1 && t.val(r).cols() == t.val(a).cols(), ErrorCode::shape_mismatch,
          "shape mismatch in add_rowvec");
  Matrix v = t.val(a);
  v.array().rowwise() += t.val(r).row(0).array();
  return t.make(std::move(v), rg2(t, a, r),
                [a, r](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  acc(tp, a, g);
                  acc(tp, r, g.colwise().sum());
                },
                "add_rowvec");
}

Var mul_rowvec(Tape& t, Var a, Var r) {
  require(t.val(r).rows() == 1 && t.val(r).cols() == t.val(a).cols(), ErrorCode::shape_mismatch,
          "shape mismatch in mul_rowvec");
  Matrix v = t.val(a);
  v.array().rowwise() *= t.val(r).row(0).array();
  return t.make(std::move(v), rg2(t, a, r),
                [a, r](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  Matrix ga = g;
                  ga.array().rowwise() *= tp.val(r).row(0).array();
                  acc(tp, a, ga);
                  acc(tp, r, g.cwiseProduct(tp.val(a)).colwise().sum());
                },
                "mul_rowvec");
}

Var mul_colvec(Tape& t, Var a, Var c) {
  require(t.val(c).cols() == 1 && t.val(c).rows() == t.val(a).rows(), ErrorCode::shape_mismatch,
          "shape mismatch in mul_colvec");
  Matrix v = t.val(a);
  v.array().colwise() *= t.val(c).col(0).array();
  return t.make(std::move(v), rg2(t, a, c),
                [a, c](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  Matrix ga = g;
                  ga.array().colwise() *= tp.val(c).col(0).array();
                  acc(tp, a, ga);
                  acc(tp, c, g.cwiseProduct(tp.val(a)).rowwise().sum());
                },
                "mul_colvec");
}

Var add_scalar(Tape& t, Var a, Var s) {
  require(t.val(s).size() == 1, ErrorCode::shape_mismatch, "add_scalar: s must be 1x1");
  Matrix v = (t.val(a).array() + t.val(s)(0, 0)).matrix();
  return t.make(std::move(v), rg2(t, a, s),
                [a, s](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  acc(tp, a, g);
                  if (tp.requires_grad(s)) tp.grad_accum(s)(0, 0) += g.sum();
                },
                "add_scalar");
}

Var sub_scalar(Tape& t, Var a, Var s) {
  require(t.val(s).size() == 1, ErrorCode::shape_mismatch, "sub_scalar: s must be 1x1");
  Matrix v = (t.val(a).array() - t.val(s)(0, 0)).matrix();
  return t.make(std::move(v), rg2(t, a, s),
                [a, s](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);
                  acc(tp, a, g);
                  if (tp.requires_grad(s)) tp.grad_accum(s)(0, 0) -= g.sum();
                },
                "sub_scalar");
}

Var colslice(Tape& t, Var a, int c0, int len) {
  require(c0 >= 0 && len >= 0 && c0 + len <= t.val(a).cols(), ErrorCode::shape_mismatch,
          "colslice out of range");
  Matrix v = t.val(a).middleCols(c0, len);
  return t.make(std::move(v), rg(t, a),
                [a, c0, len](Tape& tp, Var self) {
                  if (!tp.requires_grad(a)) return;
                  tp.grad_accum(a).middleCols(c0, len) += tp.grad_accum(self);
                },
                "colslice");
}

Var append_const_col(Tape& t, Var a, double fill) {
  const auto& av = t.val(a);
  Matrix v(av.rows(), av.cols() + 1);
  v.leftCols(av.cols()) = av;
  v.col(av.cols()).setConstant(fill);
  const int d = static_cast<int>(av.cols());
  return t.make(std::move(v), rg(t, a),
                [a, d](Tape& tp, Var self) {
                  acc(tp, a, tp.grad_accum(self).leftCols(d));
                },
                "append_const_col");
}

Var resnet_trace_quad(Tape& t, Var acoef, Var h0, Var k1, Var k0s) {
  const Matrix& Ac = t.val(acoef);
  const Matrix& H0 = t.val(h0);
  const Matrix& K1 = t.val(k1);
  const Matrix& K0s = t.val(k0s);
  const int n = static_cast<int>(Ac.rows());
  const int m = static_cast<int>(K1.rows());
  const int d = static_cast<int>(K0s.cols());
  require(H0.rows() == n && H0.cols() == m && Ac.cols() == m && K1.cols() == m && K0s.rows() == m,
          ErrorCode::shape_mismatch, "shape mismatch in resnet_trace_quad");
  // With B_i = K1 diag(h0_i) K0s, column c of B_i over the batch is
  // Tc = H0 Wc^T where Wc(r,j) = K1(r,j) K0s(j,c). One gemm per spatial
  // dimension instead of a gemv per particle.
  Matrix v = Matrix::Zero(n, 1);
  Matrix Wc(m, m), Tc;
  for (int c = 0; c < d; ++c) {
    Wc = K1.array().rowwise() * K0s.col(c).transpose().array();
    Tc.noalias() = H0 * Wc.transpose();  // n x m
    v.col(0).array() += (Tc.array().square() * Ac.array()).rowwise().sum();
  }
  bool needs = rg(t, acoef) || rg(t, h0) || rg(t, k1) || rg(t, k0s);
  return t.make(std::move(v), needs,
                [acoef, h0, k1, k0s](Tape& tp, Var self) {
                  const Matrix& g = tp.grad_accum(self);  // n x 1
                  const Matrix& Ac = tp.val(acoef);
                  const Matrix& H0 = tp.val(h0);
                  const Matrix& K1 = tp.val(k1);
                  const Matrix& K0s = tp.val(k0s);
                  const int m = static_cast<int>(K1.rows());
                  const int d = static_cast<int>(K0s.cols());
                  Matrix Wc(m, m), Tc, Gc, dWc;
                  for (int c = 0; c < d; ++c) {
                    Wc = K1.array().rowwise() * K0s.col(c).transpose().array();
                    Tc.noalias() = H0 * Wc.transpose();
                    if (tp.requires_grad(acoef))
                      tp.grad_accum(acoef).array() +=
                          Tc.array().square().colwise() * g.col(0).array();
                    Gc = 2.0 * Tc.cwiseProduct(Ac);  // dOut/dTc before the g fold
                    Gc.array().colwise() *= g.col(0).array();
                    if (tp.requires_grad(h0)) tp.grad_accum(h0).noalias() += Gc * Wc;
                    if (tp.requires_grad(k1) || tp.requires_grad(k0s)) {
                      dWc.noalias() = Gc.transpose() * H0;  // m x m
                      if (tp.requires_grad(k1))
                        tp.grad_accum(k1).array() +=
                            dWc.array().rowwise() * K0s.col(c).transpose().array();
                      if (tp.requires_grad(k0s))
                        tp.grad_accum(k0s).col(c) +=
                            dWc.cwiseProduct(K1).colwise().sum().transpose();
                    }
                  }
                },
                "resnet_trace_quad");
}

double finite_diff_check(
    const std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)>& f,
    const std::vector<double>& point, double step) {
  require(step > 0.0, ErrorCode::invalid_argument, "finite_diff_check: step must be positive");
  auto [value, analytic] = f(point);
  (void)value;
  require(analytic.size() == point.size(), ErrorCode::shape_mismatch,
          "finite_diff_check: gradient size mismatch");
  double worst = 0.0;
  std::vector<double> p = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    p[i] = point[i] + step;
    double fp = f(p).first;
    p[i] = point[i] - step;
    double fm = f(p).first;
    p[i] = point[i];
    double central = (fp - fm) / (2.0 * step);
    double err = std::abs(analytic[i] - central) / (std::abs(analytic[i]) + std::abs(central) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace swfr::ad
