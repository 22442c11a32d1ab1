// Command-line front end. Links only the C shared-library interface.
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "swfr/swfr_capi.h"

namespace {

const char* status_name(swfr_status s) {
  switch (s) {
    case SWFR_OK: return "ok";
    case SWFR_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SWFR_ERR_SHAPE_MISMATCH: return "shape_mismatch";
    case SWFR_ERR_NON_FINITE: return "non_finite";
    case SWFR_ERR_IO: return "io";
    case SWFR_ERR_CONFIG: return "config";
    case SWFR_ERR_NUMERIC: return "numeric";
    case SWFR_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

int finish(swfr_status s) {
  if (s == SWFR_OK) return 0;
  std::fprintf(stderr, "{\"error\":\"%s\",\"message\":\"%s\"}\n", status_name(s),
               json_escape(swfr_last_error()).c_str());
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geodesic flows with weighted particles"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_csv = "samples.csv";
  int count = 1000;
  std::uint64_t seed = 1;

  auto* train = app.add_subcommand("train", "train a geodesic model from a JSON config");
  train->add_option("-c,--config", config_path, "config JSON path")->required();

  auto* generate = app.add_subcommand("generate", "draw weighted samples from a checkpoint");
  generate->add_option("-k,--checkpoint", checkpoint_path, "checkpoint JSON path")->required();
  generate->add_option("-n,--count", count, "number of samples");
  generate->add_option("-s,--seed", seed, "RNG seed");
  generate->add_option("-o,--out", out_csv, "output CSV path");

  auto* bayes = app.add_subcommand("bayes", "run the sequential inference experiment");
  bayes->add_option("-c,--config", config_path, "config JSON path")->required();

  auto* sweep = app.add_subcommand("sweep", "train across a hyper-parameter list");
  sweep->add_option("-c,--config", config_path, "config JSON path")->required();

  auto* selftest = app.add_subcommand("selftest", "run the library property suites");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return finish(swfr_run_train(config_path.c_str()));
  if (bayes->parsed()) return finish(swfr_run_bayes(config_path.c_str()));
  if (sweep->parsed()) return finish(swfr_run_sweep(config_path.c_str()));
  if (selftest->parsed()) {
    int failures = 0;
    swfr_status s = swfr_selftest(&failures);
    if (s != SWFR_OK) return finish(s);
    return failures == 0 ? 0 : 1;
  }
  if (generate->parsed()) {
    swfr_model* model = nullptr;
    swfr_status s = swfr_model_open(checkpoint_path.c_str(), &model);
    if (s != SWFR_OK) return finish(s);
    s = swfr_model_generate_csv(model, count, seed, out_csv.c_str());
    swfr_model_close(model);
    return finish(s);
  }
  return 0;
}
