#include "swfr/loss.hpp"

#include <cmath>

namespace swfr {

using namespace ad;

namespace {
constexpr double kLog2Pi = 1.8378770664093453;

// trapezoid over a scalar series; tolerates either time direction
Var trapz(Tape& t, const PhiHatSeries& s) {
  require(s.size() >= 2, ErrorCode::invalid_argument, "trapz: need at least two points");
  Var acc = constant(t, Matrix::Zero(1, 1));
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    double h = std::abs(s[k + 1].first - s[k].first);
    acc = add(t, acc, scalar_mul(t, add(t, s[k].second, s[k + 1].second), 0.5 * h));
  }
  return acc;
}

double trapz_value(const std::vector<double>& times, const std::vector<double>& vals) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    acc += 0.5 * std::abs(times[k + 1] - times[k]) * (vals[k] + vals[k + 1]);
  return acc;
}
}  // namespace

Var log_density_tape(Tape& t, const DistributionSpec& spec, Var z) {
  const Eigen::Index n = t.val(z).rows();
  const Eigen::Index d = t.val(z).cols();
  if (const auto* sn = std::get_if<StdNormalSpec>(&spec)) {
    require(d == sn->d, ErrorCode::shape_mismatch, "log_density_tape: dimension mismatch");
    Var q = rowsqnorm(t, z);
    Var out = scalar_mul(t, q, -0.5);
    return add(t, out, constant(t, Matrix::Constant(n, 1, -0.5 * sn->d * kLog2Pi)));
  }
  GaussianMixtureSpec mix;
  if (const auto* gm = std::get_if<GaussianMixtureSpec>(&spec)) {
    mix = *gm;
  } else if (const auto* eg = std::get_if<EightGaussiansSpec>(&spec)) {
    mix = eight_gaussians_mixture(*eg);
  } else {
    throw Error(ErrorCode::invalid_argument, "log_density_tape: spec has no tractable density");
  }
  require(d == mix.d, ErrorCode::shape_mismatch, "log_density_tape: dimension mismatch");

  std::vector<Var> terms;
  Matrix term_vals(n, static_cast<Eigen::Index>(mix.components.size()));
  for (std::size_t c = 0; c < mix.components.size(); ++c) {
    const auto& comp = mix.components[c];
    Var diff = add_rowvec(t, z, constant(t, (-comp.mean).transpose()));
    double off = std::log(comp.weight) - 0.5 * mix.d * (kLog2Pi + std::log(comp.variance));
    Var term = add(t, scalar_mul(t, rowsqnorm(t, diff), -0.5 / comp.variance),
                   constant(t, Matrix::Constant(n, 1, off)));
    term_vals.col(c) = t.val(term).col(0);
    terms.push_back(term);
  }
  // log-sum-exp with a constant per-row shift; the shift cancels exactly so
  // it can stay off the tape
  Matrix mx = term_vals.rowwise().maxCoeff();
  Var shift = constant(t, mx);
  Var sumexp;
  for (std::size_t c = 0; c < terms.size(); ++c) {
    Var e = exp(t, sub(t, terms[c], shift));
    sumexp = c == 0 ? e : add(t, sumexp, e);
  }
  return add(t, log(t, sumexp), shift);
}

Var kl_term_tape(Tape& t, const FlowNodes& fwd, const PhiHatSeries& phihat,
                 const DistributionSpec& rho1, Var w0col, const FlowConfig& cfg) {
  Var logrho = log_density_tape(t, rho1, fwd.z_grid.back());
  Var inner = scalar_mul(t, add(t, fwd.l, logrho), -1.0);
  Var j = mean(t, mul(t, w0col, inner));
  if (!cfg.pure_transport()) {
    // -(1/alpha) int (Phi - Phi_hat) dt; with this sign the term completes
    // the log of the pulled-back density and the whole thing stays a KL,
    // bounded below by the source entropy
    j = sub(t, j, scalar_mul(t, mean(t, mul(t, w0col, fwd.iphi)), 1.0 / cfg.alpha));
    j = add(t, j, scalar_mul(t, trapz(t, phihat), 1.0 / cfg.alpha));
  }
  return j;
}

Var swfr_term_tape(Tape& t, const FlowNodes& fwd, Var w0col) {
  return mean(t, mul(t, w0col, fwd.iswfr));
}

Var reg_term_tape(Tape& t, const FlowNodes& fwd, Var w0col) {
  return mean(t, mul(t, w0col, fwd.ir));
}

LossNodes total_loss_tape(Tape& t, const FlowNodes& fwd, const PhiHatSeries& phihat,
                          const DistributionSpec& rho1, Var w0col, const FlowConfig& cfg,
                          double gamma1, double gamma2) {
  LossNodes out;
  out.j_kl = kl_term_tape(t, fwd, phihat, rho1, w0col, cfg);
  out.j_swfr = swfr_term_tape(t, fwd, w0col);
  out.j_r = reg_term_tape(t, fwd, w0col);
  out.total = add(t, out.j_kl,
                  add(t, scalar_mul(t, out.j_swfr, gamma1), scalar_mul(t, out.j_r, gamma2)));
  out.values.j_kl = t.val(out.j_kl)(0, 0);
  out.values.j_swfr = t.val(out.j_swfr)(0, 0);
  out.values.j_r = t.val(out.j_r)(0, 0);
  out.values.gamma1 = gamma1;
  out.values.gamma2 = gamma2;
  out.values.total = t.val(out.total)(0, 0);
  return out;
}

double kl_term(const TrajectoryBatch& fwd, const TrajectoryBatch& inverse,
               const DistributionSpec& rho1, const FlowConfig& cfg) {
  const int n = fwd.n();
  const Matrix& zT = fwd.terminal_z();
  const Vector& lT = fwd.l.back();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double inner = -lT(i) - log_density(rho1, zT.row(i).transpose());
    if (!cfg.pure_transport()) inner -= fwd.iphi(i) / cfg.alpha;
    acc += fwd.w0(i) * inner;
  }
  double j = acc / n;
  if (!cfg.pure_transport()) {
    std::vector<double> phys(inverse.tgrid.size());
    for (std::size_t k = 0; k < phys.size(); ++k) phys[k] = cfg.T - inverse.tgrid[k];
    j += trapz_value(phys, inverse.phibar) / cfg.alpha;
  }
  return j;
}

double swfr_term(const TrajectoryBatch& fwd) {
  return fwd.w0.dot(fwd.iswfr) / static_cast<double>(fwd.n());
}

double reg_term(const TrajectoryBatch& fwd) {
  return fwd.w0.dot(fwd.ir) / static_cast<double>(fwd.n());
}

LossTerms total_loss(const TrajectoryBatch& fwd, const TrajectoryBatch& inverse,
                     const DistributionSpec& rho1, const FlowConfig& cfg, double gamma1,
                     double gamma2) {
  LossTerms out;
  out.j_kl = kl_term(fwd, inverse, rho1, cfg);
  out.j_swfr = swfr_term(fwd);
  out.j_r = reg_term(fwd);
  out.gamma1 = gamma1;
  out.gamma2 = gamma2;
  out.total = out.j_kl + gamma1 * out.j_swfr + gamma2 * out.j_r;
  return out;
}

}  // namespace swfr
