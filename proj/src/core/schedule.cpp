#include "schedule.hpp"

namespace semcom {

NoiseSchedule build_linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 2) throw ConfigError("schedule needs at least 2 steps");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || !(beta_start < beta_end))
    throw ConfigError("require 0 < beta_start < beta_end < 1");

  NoiseSchedule s;
  s.steps = steps;
  s.betas.resize(steps);
  s.alphas.resize(steps);
  s.alpha_bars.resize(steps);
  s.sqrt_alpha_bars.resize(steps);
  s.sqrt_one_minus_alpha_bars.resize(steps);
  s.sigma2s.resize(steps);
  s.sigmas.resize(steps);
  s.coef_z0s.resize(steps);
  s.coef_zts.resize(steps);

  double abar = 1.0;
  for (int i = 0; i < steps; ++i) {
    double b = beta_start + (beta_end - beta_start) * i / (steps - 1);
    double a = 1.0 - b;
    double abar_prev = abar;
    abar *= a;
    s.betas[i] = b;
    s.alphas[i] = a;
    s.alpha_bars[i] = abar;
    s.sqrt_alpha_bars[i] = std::sqrt(abar);
    s.sqrt_one_minus_alpha_bars[i] = std::sqrt(1.0 - abar);
    s.sigma2s[i] = (1.0 - abar_prev) / (1.0 - abar) * b;
    s.sigmas[i] = std::sqrt(s.sigma2s[i]);
    s.coef_z0s[i] = std::sqrt(abar_prev) * b / (1.0 - abar);
    s.coef_zts[i] = std::sqrt(a) * (1.0 - abar_prev) / (1.0 - abar);
  }
  return s;
}

static void check_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size())
    throw ShapeError(std::string(what) + ": dimension mismatch (" +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
}

Vec forward_marginal(const NoiseSchedule& s, const Vec& z0, int t, const Vec& eps) {
  check_same_dim(z0, eps, "forward_marginal");
  return s.sqrt_alpha_bar(t) * z0 + s.sqrt_one_minus_alpha_bar(t) * eps;
}

Vec forward_step(const NoiseSchedule& s, const Vec& z_prev, int t, const Vec& eps) {
  check_same_dim(z_prev, eps, "forward_step");
  double b = s.beta(t);
  return std::sqrt(1.0 - b) * z_prev + std::sqrt(b) * eps;
}

PosteriorParams posterior_params(const NoiseSchedule& s, const Vec& z_t,
                                 const Vec& z0_hat, int t) {
  if (t < 2) throw ContractError("posterior_params requires t >= 2");
  s.check_t(t);
  check_same_dim(z_t, z0_hat, "posterior_params");
  PosteriorParams p;
  p.mean = s.coef_z0(t) * z0_hat + s.coef_zt(t) * z_t;
  p.variance = s.sigma2(t);
  return p;
}

Vec estimate_z0(const NoiseSchedule& s, const Vec& z_t, const Vec& eps_hat, int t) {
  check_same_dim(z_t, eps_hat, "estimate_z0");
  return (z_t - s.sqrt_one_minus_alpha_bar(t) * eps_hat) / s.sqrt_alpha_bar(t);
}

}  // namespace semcom
