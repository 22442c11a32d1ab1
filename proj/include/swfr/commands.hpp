#pragma once

#include <string>

#include <json.hpp>

#include "swfr/bayes.hpp"
#include "swfr/trainer.hpp"

namespace swfr {

// JSON lowering of the config surface shared by the commands. Strict: every
// object rejects keys it does not understand.
DistributionSpec parse_distribution(const nlohmann::json& j, const std::string& context);
TrainConfig parse_train_config(const nlohmann::json& j, const std::string& context);

struct TrainOutcome {
  std::string checkpoint_best;
  std::string checkpoint_final;
  std::string metrics_path;
  LossTerms best;  // losses at the best iteration
};

// Artifact-producing command bodies behind the C API. Each takes a parsed
// config document and writes into <output_dir>/<name>/.
TrainOutcome cmd_train(const nlohmann::json& cfg);
void cmd_bayes(const nlohmann::json& cfg);
void cmd_sweep(const nlohmann::json& cfg);

// Generation from a saved checkpoint; the reference distribution comes from
// the stored config. Returns the batch and optionally writes the CSV.
WeightedBatch cmd_generate(const std::string& checkpoint_path, int count, std::uint64_t seed,
                           const std::string& csv_path);

// Property suites; returns the number of failed checks, printing one line
// per suite.
int run_selftest();

}  // namespace swfr
