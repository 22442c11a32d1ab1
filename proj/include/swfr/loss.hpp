#pragma once

#include <utility>
#include <vector>

#include "swfr/distributions.hpp"
#include "swfr/flow.hpp"

namespace swfr {

struct LossTerms {
  double j_kl = 0.0;
  double j_swfr = 0.0;
  double j_r = 0.0;
  double gamma1 = 0.01;
  double gamma2 = 0.01;
  double total = 0.0;
};

// Phi-hat series on the step grid: (physical time, ensemble mean potential).
using PhiHatSeries = std::vector<std::pair<double, ad::Var>>;

struct LossNodes {
  ad::Var j_kl, j_swfr, j_r, total;
  LossTerms values;
};

// J_KL = (1/n) sum_i w_i(0) [ -l_i(T) - log rho1(z_i(T)) + (1/alpha) I_phi,i ]
//        - (1/alpha) * trapz(Phi-hat)
ad::Var kl_term_tape(ad::Tape& t, const FlowNodes& fwd, const PhiHatSeries& phihat,
                     const DistributionSpec& rho1, ad::Var w0col, const FlowConfig& cfg);

// weight-folded batch means of the running integrals
ad::Var swfr_term_tape(ad::Tape& t, const FlowNodes& fwd, ad::Var w0col);
ad::Var reg_term_tape(ad::Tape& t, const FlowNodes& fwd, ad::Var w0col);

LossNodes total_loss_tape(ad::Tape& t, const FlowNodes& fwd, const PhiHatSeries& phihat,
                          const DistributionSpec& rho1, ad::Var w0col, const FlowConfig& cfg,
                          double gamma1, double gamma2);

// Value-side counterparts over an integrated TrajectoryBatch (phibar of an
// inverse batch supplies the Phi-hat series).
double kl_term(const TrajectoryBatch& fwd, const TrajectoryBatch& inverse,
               const DistributionSpec& rho1, const FlowConfig& cfg);
double swfr_term(const TrajectoryBatch& fwd);
double reg_term(const TrajectoryBatch& fwd);
LossTerms total_loss(const TrajectoryBatch& fwd, const TrajectoryBatch& inverse,
                     const DistributionSpec& rho1, const FlowConfig& cfg, double gamma1,
                     double gamma2);

// log rho1 evaluated on-tape at a batch of positions (n x d) -> n x 1.
ad::Var log_density_tape(ad::Tape& t, const DistributionSpec& spec, ad::Var z);

}  // namespace swfr
