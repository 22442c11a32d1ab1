#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "swfr/common.hpp"

namespace swfr::ad {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode tape over dense row-major matrices. A tape is
// rebuilt for every forward pass; nodes are appended in topological order and
// backward() walks them in reverse. Single-threaded per tape.
class Tape {
 public:
  struct Node {
    Matrix value;
    Matrix grad;  // allocated lazily during backward
    bool requires_grad = false;
    // invoked as bp(tape, self); captures parent ids, not references
    std::function<void(Tape&, Var)> backprop;
  };

  // reallocation of the node vector copies every backprop closure, which
  // shows up in training profiles; reserve enough for a typical unrolled step
  Tape() { nodes_.reserve(8192); }

  Var leaf(Matrix v, bool requires_grad);
  Var make(Matrix v, bool requires_grad, std::function<void(Tape&, Var)> bp, const char* op);

  const Matrix& val(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Valid after backward(); zero matrix if the node received no gradient.
  const Matrix& grad(Var v);
  Matrix& grad_accum(Var v);  // used by op backprop closures

  // Reverse sweep from a scalar (1x1) root. Re-zeroes all accumulators first.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

// ---- op set ------------------------------------------------------------
Var constant(Tape& t, Matrix v);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);  // elementwise
Var scalar_mul(Tape& t, Var a, double k);
Var matmul(Tape& t, Var a, Var b);
Var matmul_nt(Tape& t, Var a, Var b);  // a * b^T
Var transpose(Tape& t, Var a);
Var sum(Tape& t, Var a);      // 1x1
Var mean(Tape& t, Var a);     // 1x1
Var sqnorm(Tape& t, Var a);   // 1x1, sum of squares
Var rowsum(Tape& t, Var a);   // nx1
Var rowsqnorm(Tape& t, Var a);  // nx1
Var exp(Tape& t, Var a);
Var log(Tape& t, Var a);
Var tanh(Tape& t, Var a);
// sigma(x) = log(exp(x)+exp(-x)), evaluated as |x| + log1p(exp(-2|x|));
// sigma'(x) = tanh(x).
Var act_sigma(Tape& t, Var a);
Var add_rowvec(Tape& t, Var a, Var r);   // a (nxc) + broadcast r (1xc)
Var mul_rowvec(Tape& t, Var a, Var r);
Var mul_colvec(Tape& t, Var a, Var c);   // a (nxc) .* broadcast c (nx1)
Var add_scalar(Tape& t, Var a, Var s);   // s is 1x1
Var sub_scalar(Tape& t, Var a, Var s);
Var colslice(Tape& t, Var a, int c0, int len);
Var append_const_col(Tape& t, Var a, double fill);  // [a, fill*ones]

// Per-row trace contribution of the second ResNet layer:
//   out_i = sum_k acoef(i,k) * | K1 diag(h0_i) K0s |_{k,.}^2
// with acoef, h0 of shape n x m, K1 m x m, K0s m x d. Fused so the spatial
// Hessian trace stays closed-form on the tape.
Var resnet_trace_quad(Tape& t, Var acoef, Var h0, Var k1, Var k0s);

// max over coordinates of |analytic - central difference| / (|a|+|c|+1e-12).
// f returns (value, analytic gradient) at a parameter vector.
double finite_diff_check(
    const std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)>& f,
    const std::vector<double>& point, double step);

}  // namespace swfr::ad
