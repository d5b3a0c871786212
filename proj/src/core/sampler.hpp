#pragma once

#include "channel.hpp"
#include "common.hpp"
#include "denoiser.hpp"
#include "schedule.hpp"

#include <utility>
#include <vector>

namespace semcom {

enum class LambdaMode {
  PosteriorGain,  // lambda = (1-abar_t) / ((1-abar_t) + sigma_y^2)
  NoiseRatio,     // lambda = min(1, sigma_t / sigma_y)
  ExactZeroGamma  // lambda = min(1, sigma_t / (c_t sigma_y)): gamma vanishes
                  // exactly in the capped branch
};

struct RestorationConfig {
  double guidance_scale = 3.0;
  double sigma_y = 0.0;
  LambdaMode lambda_mode = LambdaMode::PosteriorGain;
  uint64_t seed = 0;
  bool record_diagnostics = true;

  void validate() const {
    if (sigma_y < 0.0) throw ConfigError("sigma_y must be nonnegative");
    if (guidance_scale < 0.0) throw ConfigError("guidance_scale must be nonnegative");
  }
};

struct StepDiag {
  int t;
  double lambda;
  double gamma;
  double residual;  // max-norm consistency residual of the corrected z0
};

struct RestorationResult {
  Vec z0_hat;
  std::vector<StepDiag> diagnostics;
  int steps = 0;
};

// Per-step range-correction and noise scales. lambda_t is the gain applied
// to the range-space residual; gamma_t = sigma_t^2 - (c_t lambda_t sigma_y)^2
// with c_t = sqrt(abar_{t-1}) beta_t / (1 - abar_t), so the correction noise
// propagated into z_{t-1} plus the injected noise always totals sigma_t^2.
// PosteriorGain uses the conjugate-Gaussian gain and is the only mode whose
// restoration mean matches the Bayesian posterior in the linear-Gaussian
// setting. All modes give lambda = 1 when sigma_y = 0. A gamma below -1e-12
// raises InvariantViolation instead of being clamped. Valid for t >= 1
// (sigma_1 = 0, so at the terminal step lambda is 0 when sigma_y > 0).
std::pair<double, double> lambda_gamma(const NoiseSchedule& s, int t,
                                       double sigma_y, LambdaMode mode);

// Reverse process with range-space correction scaled by lambda_t and noise
// scaled by gamma_t. With sigma_y = 0 this is the noiseless restoration path
// bit-for-bit (see restore_noiseless). Conditioning comes from
// obs.cond_received; an empty embedding means unconditional.
RestorationResult restore(const Denoiser& model, const NoiseSchedule& s,
                          const Observation& obs, const RestorationConfig& cfg);

// Noiseless restoration written as the literal range/null recombination
// z0 -> A+ y + (I - A+A) z0 at every step. Kept as a separate code path so
// the sigma_y = 0 degeneration of restore() can be checked bit-exactly.
RestorationResult restore_noiseless(const Denoiser& model, const NoiseSchedule& s,
                                    const Observation& obs,
                                    const RestorationConfig& cfg);

// Plain (un)conditional generation, no range correction.
Vec ancestral_sample(const Denoiser& model, const NoiseSchedule& s,
                     const Condition& cond, const RestorationConfig& cfg);

// RePaint-style baseline: at each step the known region is sampled forward
// from A+ y and pasted over the generated state; no lambda/gamma handling.
RestorationResult replace_baseline(const Denoiser& model, const NoiseSchedule& s,
                                   const Observation& obs,
                                   const RestorationConfig& cfg);

}  // namespace semcom
