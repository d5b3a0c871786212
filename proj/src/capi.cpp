#include "semcom/semcom.h"

#include "core/channel.hpp"
#include "core/denoiser.hpp"
#include "core/harness.hpp"
#include "core/linop.hpp"
#include "core/sampler.hpp"
#include "core/schedule.hpp"
#include "core/tiny_denoiser.hpp"

#include <cstring>
#include <memory>
#include <string>

using namespace semcom;

namespace {

thread_local std::string g_last_error;

int set_error(int code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename F>
int guarded(F&& f) {
  try {
    f();
    return SEMCOM_OK;
  } catch (const SamplerDivergence& e) {
    return set_error(SEMCOM_ERR_DIVERGED, e.what());
  } catch (const ConfigError& e) {
    return set_error(SEMCOM_ERR_CONFIG, e.what());
  } catch (const ShapeError& e) {
    return set_error(SEMCOM_ERR_SHAPE, e.what());
  } catch (const ContractError& e) {
    return set_error(SEMCOM_ERR_CONTRACT, e.what());
  } catch (const InvariantViolation& e) {
    return set_error(SEMCOM_ERR_INVARIANT, e.what());
  } catch (const TrainingError& e) {
    return set_error(SEMCOM_ERR_TRAINING, e.what());
  } catch (const EstimationError& e) {
    return set_error(SEMCOM_ERR_CONTRACT, e.what());
  } catch (const std::exception& e) {
    return set_error(SEMCOM_ERR_UNKNOWN, e.what());
  } catch (...) {
    return set_error(SEMCOM_ERR_UNKNOWN, "unknown error");
  }
}

}  // namespace

struct semcom_schedule_s {
  NoiseSchedule s;
};
struct semcom_operator_s {
  DegradationOperator op;
};
struct semcom_denoiser_s {
  std::unique_ptr<Denoiser> model;
};

extern "C" {

const char* semcom_last_error(void) { return g_last_error.c_str(); }
const char* semcom_version(void) { return "semcom 1.0.0"; }

int semcom_schedule_create_linear(int steps, double beta_start, double beta_end,
                                  semcom_schedule** out) {
  if (!out) return set_error(SEMCOM_ERR_CONTRACT, "null output pointer");
  return guarded([&] {
    *out = new semcom_schedule_s{build_linear_schedule(steps, beta_start, beta_end)};
  });
}

void semcom_schedule_destroy(semcom_schedule* s) { delete s; }

int semcom_schedule_steps(const semcom_schedule* s) { return s ? s->s.steps : 0; }

int semcom_schedule_alpha_bar(const semcom_schedule* s, int t, double* out) {
  if (!s || !out) return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] { *out = s->s.alpha_bar(t); });
}

int semcom_schedule_sigma(const semcom_schedule* s, int t, double* out) {
  if (!s || !out) return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] { *out = s->s.sigma(t); });
}

int semcom_operator_create_identity(int dim, semcom_operator** out) {
  if (!out) return set_error(SEMCOM_ERR_CONTRACT, "null output pointer");
  return guarded([&] {
    *out = new semcom_operator_s{DegradationOperator::identity(dim)};
  });
}

int semcom_operator_create_segment_mask(int dim, int drop_start, int drop_len,
                                        semcom_operator** out) {
  if (!out) return set_error(SEMCOM_ERR_CONTRACT, "null output pointer");
  return guarded([&] {
    *out = new semcom_operator_s{
        DegradationOperator::segment_mask(dim, drop_start, drop_len)};
  });
}

void semcom_operator_destroy(semcom_operator* op) { delete op; }

int semcom_operator_apply(const semcom_operator* op, const double* z, int n,
                          double* out) {
  if (!op || !z || !out) return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] {
    Vec v = Eigen::Map<const Vec>(z, n);
    Vec y = op->op.apply(v);
    std::memcpy(out, y.data(), sizeof(double) * y.size());
  });
}

int semcom_operator_pinv_apply(const semcom_operator* op, const double* y, int n,
                               double* out) {
  if (!op || !y || !out) return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] {
    Vec v = Eigen::Map<const Vec>(y, n);
    Vec z = op->op.pinv_apply(v);
    std::memcpy(out, z.data(), sizeof(double) * z.size());
  });
}

int semcom_denoiser_create_mixture(const double* weights, const double* means,
                                   const double* variances, int components,
                                   int dim, const semcom_schedule* schedule,
                                   double cond_noise_std, int hard_snap,
                                   semcom_denoiser** out) {
  if (!weights || !means || !variances || !schedule || !out)
    return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] {
    GaussianMixturePrior prior;
    prior.weights = Eigen::Map<const Vec>(weights, components);
    prior.means = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                 Eigen::Dynamic, Eigen::RowMajor>>(
        means, components, dim);
    prior.variances = Eigen::Map<const Eigen::Matrix<
        double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(variances,
                                                                  components, dim);
    *out = new semcom_denoiser_s{std::make_unique<MixtureOracleDenoiser>(
        std::move(prior), &schedule->s, cond_noise_std, hard_snap != 0)};
  });
}

int semcom_denoiser_load_tiny(const char* path, const semcom_schedule* schedule,
                              semcom_denoiser** out) {
  if (!path || !schedule || !out)
    return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] {
    *out = new semcom_denoiser_s{
        std::make_unique<TinyDenoiser>(TinyDenoiser::load(path, &schedule->s))};
  });
}

void semcom_denoiser_destroy(semcom_denoiser* d) { delete d; }

int semcom_restore(const semcom_denoiser* model, const semcom_schedule* schedule,
                   const semcom_operator* op, const double* y, int y_len,
                   const double* cond, int cond_len, double cond_noise_std,
                   const semcom_restore_options* options, double* z0_out,
                   double* residual_out) {
  if (!model || !schedule || !op || !y || !options || !z0_out)
    return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] {
    Observation obs;
    obs.op = op->op;
    obs.y = Eigen::Map<const Vec>(y, y_len);
    if (cond && cond_len > 0) {
      obs.cond_received = Eigen::Map<const Vec>(cond, cond_len);
      obs.cond_noise_std_hint = cond_noise_std;
    }
    RestorationConfig cfg;
    cfg.guidance_scale = options->guidance_scale;
    cfg.sigma_y = options->sigma_y;
    cfg.lambda_mode = options->lambda_mode == SEMCOM_LAMBDA_EXACT_ZERO_GAMMA
                          ? LambdaMode::ExactZeroGamma
                      : options->lambda_mode == SEMCOM_LAMBDA_NOISE_RATIO
                          ? LambdaMode::NoiseRatio
                          : LambdaMode::PosteriorGain;
    cfg.seed = options->seed;
    RestorationResult res = restore(*model->model, schedule->s, obs, cfg);
    std::memcpy(z0_out, res.z0_hat.data(), sizeof(double) * res.z0_hat.size());
    if (residual_out)
      *residual_out =
          res.diagnostics.empty() ? 0.0 : res.diagnostics.back().residual;
  });
}

int semcom_run_grid(const char* config_json, const char* out_dir, int workers,
                    int64_t seed_override) {
  if (!config_json || !out_dir)
    return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] {
    ExperimentConfig cfg = parse_experiment_config(config_json);
    if (seed_override >= 0) cfg.master_seed = static_cast<uint64_t>(seed_override);
    run_grid(cfg, out_dir, workers > 0 ? workers : 1);
  });
}

int semcom_train_denoiser(const char* config_json, const char* out_path,
                          double* final_loss_out) {
  if (!config_json) return set_error(SEMCOM_ERR_CONTRACT, "null argument");
  return guarded([&] {
    double loss =
        train_denoiser_from_config(config_json, out_path ? out_path : "");
    if (final_loss_out) *final_loss_out = loss;
  });
}

int semcom_selftest(void) {
  int rc = SEMCOM_OK;
  int guard_rc = guarded([&] {
    if (!run_selftest(true)) rc = SEMCOM_ERR_SELFTEST;
  });
  if (guard_rc != SEMCOM_OK) return guard_rc;
  if (rc != SEMCOM_OK) g_last_error = "selftest reported failures";
  return rc;
}

}  // extern "C"
