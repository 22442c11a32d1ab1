#pragma once

#include <functional>
#include <string>
#include <vector>

#include "swfr/distributions.hpp"
#include "swfr/loss.hpp"
#include "swfr/optim.hpp"

namespace swfr {

struct TrainConfig {
  std::uint64_t seed = 1;
  int iterations = 500;
  int n = 2048;     // training particles
  int batch = 0;    // 0 selects full batch
  int m = 32;       // hidden width
  FlowConfig flow;
  double gamma1 = 0.01;
  double gamma2 = 0.01;
  AdamConfig adam;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  // Phi-hat handling: the default treats the inverse trajectory as data and
  // differentiates only through the potential evaluated along it.
  bool full_graph_phihat = false;
  // Window refits start from an already-fitted flow and only need a nudge.
  // Long refits at the full rate walk the training surrogate into
  // discretization artifacts and eventually blow the potential up, so the
  // online phase is short and slow by default.
  int online_iterations = 60;
  double online_lr = 0.003;

  int effective_batch() const { return batch > 0 ? batch : n; }
  void validate() const {
    require(iterations >= 1, ErrorCode::invalid_argument, "TrainConfig: iterations must be >= 1");
    require(n >= 1, ErrorCode::invalid_argument, "TrainConfig: n must be >= 1");
    require(batch >= 0 && batch <= n, ErrorCode::invalid_argument,
            "TrainConfig: batch must be in [0, n]");
    require(m >= 1, ErrorCode::invalid_argument, "TrainConfig: m must be >= 1");
    require(gamma1 >= 0.0 && gamma2 >= 0.0, ErrorCode::invalid_argument,
            "TrainConfig: gammas must be nonnegative");
    require(online_iterations >= 1 && online_lr > 0.0, ErrorCode::invalid_argument,
            "TrainConfig: online phase needs positive iterations and lr");
    flow.validate();
  }
};

struct TrainStart {
  PotentialParams params;
  AdamState adam;
  long iteration = 0;
  std::string rng_state;  // empty reseeds from cfg.seed
};

// (iter, per-iteration losses, wall ms, effective sample size of w(T))
using MetricsCallback = std::function<void(long, const LossTerms&, double, double)>;
// invoked at the checkpoint cadence with a resumable snapshot
using CheckpointCallback = std::function<void(const TrainStart&)>;

struct TrainResult {
  PotentialParams params;  // parameters at the best total loss
  PotentialParams last;    // last iterate, for warm starts
  AdamState adam;          // state after the last step
  std::string rng_state;
  std::vector<LossTerms> history;
  double best_total = 0.0;
  long best_iter = -1;
  long iterations_run = 0;
};

TrainResult train_geodesic(const WeightedBatch& rho0, const DistributionSpec& rho1,
                           const TrainConfig& cfg, const TrainStart* resume = nullptr,
                           const MetricsCallback& on_metrics = {},
                           const CheckpointCallback& on_checkpoint = {});

// UOT-gen: invert the trained flow from fresh rho1 draws; weights are
// rescaled to mean exactly 1.
WeightedBatch generate_weighted_samples(const PotentialParams& params,
                                        const DistributionSpec& rho1, int count,
                                        const FlowConfig& cfg, Rng& rng);

struct OnlineUpdateResult {
  WeightedBatch ensemble;  // generated samples reweighted by the new window
  TrainResult train;
  double n_eff = 0.0;
  bool ess_warning = false;
};

// One sequential update: generate from the current model, fold in the
// likelihood of the new observation window, renormalize, retrain warm-started.
// log_lik maps a sample position to the window's log-likelihood; an empty
// callback means no new data.
OnlineUpdateResult online_update(const PotentialParams& params, const AdamState& adam,
                                 const std::function<double(const Vector&)>& log_lik,
                                 const DistributionSpec& rho1, const TrainConfig& cfg, Rng& rng);

}  // namespace swfr
