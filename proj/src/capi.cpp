#include "swfr/swfr_capi.h"

#include <string>

#include "swfr/commands.hpp"
#include "swfr/io.hpp"

namespace {

thread_local std::string g_last_error;

swfr_status to_status(swfr::ErrorCode c) {
  using swfr::ErrorCode;
  switch (c) {
    case ErrorCode::invalid_argument: return SWFR_ERR_INVALID_ARGUMENT;
    case ErrorCode::shape_mismatch: return SWFR_ERR_SHAPE_MISMATCH;
    case ErrorCode::non_finite: return SWFR_ERR_NON_FINITE;
    case ErrorCode::io: return SWFR_ERR_IO;
    case ErrorCode::config: return SWFR_ERR_CONFIG;
    case ErrorCode::numeric: return SWFR_ERR_NUMERIC;
  }
  return SWFR_ERR_INTERNAL;
}

template <typename Fn>
swfr_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SWFR_OK;
  } catch (const swfr::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SWFR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SWFR_ERR_INTERNAL;
  }
}

}  // namespace

struct swfr_model {
  swfr::Checkpoint ck;
  swfr::DistributionSpec rho1;
  swfr::TrainConfig tc;
};

extern "C" {

const char* swfr_last_error(void) { return g_last_error.c_str(); }

swfr_status swfr_run_train(const char* config_path) {
  return guarded([&] {
    swfr::require(config_path != nullptr, swfr::ErrorCode::invalid_argument,
                  "swfr_run_train: null config path");
    swfr::cmd_train(swfr::load_json(config_path));
  });
}

swfr_status swfr_run_bayes(const char* config_path) {
  return guarded([&] {
    swfr::require(config_path != nullptr, swfr::ErrorCode::invalid_argument,
                  "swfr_run_bayes: null config path");
    swfr::cmd_bayes(swfr::load_json(config_path));
  });
}

swfr_status swfr_run_sweep(const char* config_path) {
  return guarded([&] {
    swfr::require(config_path != nullptr, swfr::ErrorCode::invalid_argument,
                  "swfr_run_sweep: null config path");
    swfr::cmd_sweep(swfr::load_json(config_path));
  });
}

swfr_status swfr_selftest(int* failures) {
  return guarded([&] {
    int f = swfr::run_selftest();
    if (failures) *failures = f;
  });
}

swfr_status swfr_model_open(const char* checkpoint_path, swfr_model** out) {
  return guarded([&] {
    swfr::require(checkpoint_path != nullptr && out != nullptr,
                  swfr::ErrorCode::invalid_argument, "swfr_model_open: null argument");
    auto* m = new swfr_model;
    try {
      m->ck = swfr::load_checkpoint(checkpoint_path);
      swfr::require(m->ck.config_echo.contains("rho1"), swfr::ErrorCode::config,
                    "swfr_model_open: checkpoint config lacks rho1");
      m->rho1 = swfr::parse_distribution(m->ck.config_echo.at("rho1"), "rho1");
      m->tc = swfr::parse_train_config(
          m->ck.config_echo.value("train", nlohmann::json::object()), "train");
      swfr::require(swfr::dim(m->rho1) == m->ck.params.d(), swfr::ErrorCode::shape_mismatch,
                    "swfr_model_open: checkpoint/config dimension mismatch");
    } catch (...) {
      delete m;
      throw;
    }
    *out = m;
  });
}

void swfr_model_close(swfr_model* model) { delete model; }

swfr_status swfr_model_dim(const swfr_model* model, int* out_dim) {
  return guarded([&] {
    swfr::require(model != nullptr && out_dim != nullptr, swfr::ErrorCode::invalid_argument,
                  "swfr_model_dim: null argument");
    *out_dim = model->ck.params.d();
  });
}

swfr_status swfr_model_generate(swfr_model* model, int count, uint64_t seed, double* x,
                                double* w) {
  return guarded([&] {
    swfr::require(model != nullptr && x != nullptr && w != nullptr,
                  swfr::ErrorCode::invalid_argument, "swfr_model_generate: null argument");
    swfr::require(count >= 1, swfr::ErrorCode::invalid_argument,
                  "swfr_model_generate: count must be >= 1");
    swfr::Rng rng(seed);
    swfr::WeightedBatch b =
        swfr::generate_weighted_samples(model->ck.params, model->rho1, count, model->tc.flow, rng);
    const int d = static_cast<int>(b.x.cols());
    for (int i = 0; i < count; ++i) {
      for (int j = 0; j < d; ++j) x[i * d + j] = b.x(i, j);
      w[i] = b.w(i);
    }
  });
}

swfr_status swfr_model_generate_csv(swfr_model* model, int count, uint64_t seed,
                                    const char* csv_path) {
  return guarded([&] {
    swfr::require(model != nullptr && csv_path != nullptr, swfr::ErrorCode::invalid_argument,
                  "swfr_model_generate_csv: null argument");
    swfr::Rng rng(seed);
    swfr::WeightedBatch b =
        swfr::generate_weighted_samples(model->ck.params, model->rho1, count, model->tc.flow, rng);
    swfr::save_weighted_csv(csv_path, b.x, b.w);
  });
}

}  // extern "C"
