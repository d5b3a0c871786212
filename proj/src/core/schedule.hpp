#pragma once

#include "common.hpp"

#include <utility>
#include <vector>

namespace semcom {

// Diffusion-time bookkeeping. All per-step quantities are precomputed at
// construction; step indices are 1-based (t in 1..steps), with the t-1 = 0
// boundary defined by alpha_bar_prev(1) == 1, which makes sigma(1) == 0.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
  std::vector<double> sqrt_alpha_bars;
  std::vector<double> sqrt_one_minus_alpha_bars;
  std::vector<double> sigma2s;  // posterior variance sigma_t^2
  std::vector<double> sigmas;
  std::vector<double> coef_z0s;  // sqrt(abar_{t-1}) beta_t / (1 - abar_t)
  std::vector<double> coef_zts;  // sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t)

  void check_t(int t) const {
    if (t < 1 || t > steps)
      throw ContractError("step index " + std::to_string(t) +
                          " outside 1.." + std::to_string(steps));
  }

  double beta(int t) const { check_t(t); return betas[t - 1]; }
  double alpha(int t) const { check_t(t); return alphas[t - 1]; }
  double alpha_bar(int t) const { check_t(t); return alpha_bars[t - 1]; }
  double alpha_bar_prev(int t) const {
    check_t(t);
    return t >= 2 ? alpha_bars[t - 2] : 1.0;
  }
  double sqrt_alpha_bar(int t) const { check_t(t); return sqrt_alpha_bars[t - 1]; }
  double sqrt_one_minus_alpha_bar(int t) const {
    check_t(t);
    return sqrt_one_minus_alpha_bars[t - 1];
  }
  double sigma2(int t) const { check_t(t); return sigma2s[t - 1]; }
  double sigma(int t) const { check_t(t); return sigmas[t - 1]; }
  // posterior mean coefficients of Eq-style mu_t(z_t, z0)
  double coef_z0(int t) const { check_t(t); return coef_z0s[t - 1]; }
  double coef_zt(int t) const { check_t(t); return coef_zts[t - 1]; }
};

NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end);

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
Vec forward_marginal(const NoiseSchedule& s, const Vec& z0, int t, const Vec& eps);

// Single forward transition z_t = sqrt(1 - beta_t) z_{t-1} + sqrt(beta_t) eps.
Vec forward_step(const NoiseSchedule& s, const Vec& z_prev, int t, const Vec& eps);

struct PosteriorParams {
  Vec mean;
  double variance;
};

// Mean/variance of p(z_{t-1} | z_t, z0). Requires t >= 2; t == 1 is the
// terminal step and is handled by the sampler directly.
PosteriorParams posterior_params(const NoiseSchedule& s, const Vec& z_t,
                                 const Vec& z0_hat, int t);

// z0 = (z_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t), the inversion of the
// forward marginal.
Vec estimate_z0(const NoiseSchedule& s, const Vec& z_t, const Vec& eps_hat, int t);

}  // namespace semcom
