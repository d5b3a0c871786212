#include "sampler.hpp"

#include <cmath>

namespace semcom {

std::pair<double, double> lambda_gamma(const NoiseSchedule& s, int t,
                                       double sigma_y, LambdaMode mode) {
  s.check_t(t);
  if (sigma_y < 0.0) throw ContractError("sigma_y must be nonnegative");

  // c <= 1 always, and sigma_t = 0 forces lambda = 0 when sigma_y > 0, so
  // gamma stays nonnegative in every mode.
  double c = s.coef_z0(t);
  double st = s.sigma(t);
  double lambda;
  if (sigma_y == 0.0) {
    lambda = 1.0;
  } else if (mode == LambdaMode::PosteriorGain) {
    double v = 1.0 - s.alpha_bar(t);
    lambda = st == 0.0 ? 0.0 : v / (v + sigma_y * sigma_y);
  } else if (mode == LambdaMode::NoiseRatio) {
    lambda = std::min(1.0, st / sigma_y);
  } else {
    lambda = std::min(1.0, st / (c * sigma_y));
  }

  double scaled = c * lambda * sigma_y;
  double gamma = s.sigma2(t) - scaled * scaled;
  if (mode == LambdaMode::ExactZeroGamma && lambda < 1.0) gamma = 0.0;
  if (gamma < 0.0) {
    if (gamma < -1e-12)
      throw InvariantViolation("negative gamma_t = " + std::to_string(gamma) +
                               " at t = " + std::to_string(t));
    gamma = 0.0;
  }
  return {lambda, gamma};
}

namespace {

Condition condition_from(const Observation& obs) {
  if (obs.cond_received.size() == 0) return Condition::null_condition();
  return Condition::from(obs.cond_received, obs.cond_noise_std_hint);
}

void check_finite(const Vec& z, int t) {
  if (!z.allFinite()) throw SamplerDivergence(t);
}

double consistency_residual(const DegradationOperator& op, const Vec& z0_hat,
                            const Vec& y) {
  return (op.apply(z0_hat) - op.apply(op.pinv_apply(y))).cwiseAbs().maxCoeff();
}

// Shared reverse loop. The corrector returns the range-corrected z0 estimate
// plus the noise variance for the transition; restore() and
// restore_noiseless() differ only in that hook.
template <typename Corrector>
RestorationResult reverse_loop(const Denoiser& model, const NoiseSchedule& s,
                               const Observation& obs,
                               const RestorationConfig& cfg,
                               Corrector&& correct) {
  cfg.validate();
  if (model.dim() != obs.op.dim_in())
    throw ShapeError("denoiser and operator dimensions disagree");
  if (obs.y.size() != obs.op.dim_out())
    throw ShapeError("observation dimension mismatch");

  Condition cond = condition_from(obs);
  Rng rng(cfg.seed);
  Vec z = rng.normal_vec(model.dim());

  RestorationResult res;
  res.steps = s.steps;
  if (cfg.record_diagnostics) res.diagnostics.reserve(s.steps);

  for (int t = s.steps; t >= 1; --t) {
    Vec eps_hat = predict_noise(model, z, t, cond, cfg.guidance_scale);
    Vec z0 = estimate_z0(s, z, eps_hat, t);

    auto [z0_hat, lambda, gamma] = correct(z0, t);
    check_finite(z0_hat, t);

    if (cfg.record_diagnostics)
      res.diagnostics.push_back(
          {t, lambda, gamma, consistency_residual(obs.op, z0_hat, obs.y)});

    if (t == 1) {
      res.z0_hat = std::move(z0_hat);
      return res;
    }
    z = s.coef_z0(t) * z0_hat + s.coef_zt(t) * z;
    double noise = std::sqrt(gamma);
    if (noise > 0.0) z += noise * rng.normal_vec(z.size());
    check_finite(z, t - 1);
  }
  throw InvariantViolation("reverse loop fell through");
}

}  // namespace

RestorationResult restore(const Denoiser& model, const NoiseSchedule& s,
                          const Observation& obs, const RestorationConfig& cfg) {
  return reverse_loop(model, s, obs, cfg, [&](const Vec& z0, int t) {
    auto [lambda, gamma] = lambda_gamma(s, t, cfg.sigma_y, cfg.lambda_mode);
    Vec z0_hat =
        lambda == 1.0
            ? obs.op.combine_solution(obs.y, z0)
            : Vec(z0 - lambda * obs.op.pinv_apply(obs.op.apply(z0) - obs.y));
    return std::make_tuple(std::move(z0_hat), lambda, gamma);
  });
}

RestorationResult restore_noiseless(const Denoiser& model, const NoiseSchedule& s,
                                    const Observation& obs,
                                    const RestorationConfig& cfg) {
  if (cfg.sigma_y != 0.0)
    throw ContractError("restore_noiseless requires sigma_y = 0");
  return reverse_loop(model, s, obs, cfg, [&](const Vec& z0, int t) {
    return std::make_tuple(obs.op.combine_solution(obs.y, z0), 1.0, s.sigma2(t));
  });
}

Vec ancestral_sample(const Denoiser& model, const NoiseSchedule& s,
                     const Condition& cond, const RestorationConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Vec z = rng.normal_vec(model.dim());
  for (int t = s.steps; t >= 1; --t) {
    Vec eps_hat = predict_noise(model, z, t, cond, cfg.guidance_scale);
    Vec z0 = estimate_z0(s, z, eps_hat, t);
    check_finite(z0, t);
    if (t == 1) return z0;
    z = s.coef_z0(t) * z0 + s.coef_zt(t) * z + s.sigma(t) * rng.normal_vec(z.size());
    check_finite(z, t - 1);
  }
  throw InvariantViolation("reverse loop fell through");
}

RestorationResult replace_baseline(const Denoiser& model, const NoiseSchedule& s,
                                   const Observation& obs,
                                   const RestorationConfig& cfg) {
  cfg.validate();
  if (model.dim() != obs.op.dim_in())
    throw ShapeError("denoiser and operator dimensions disagree");

  Condition cond = condition_from(obs);
  Vec y_latent = obs.op.pinv_apply(obs.y);
  Rng rng(cfg.seed);
  Vec z = rng.normal_vec(model.dim());

  RestorationResult res;
  res.steps = s.steps;
  if (cfg.record_diagnostics) res.diagnostics.reserve(s.steps);

  for (int t = s.steps; t >= 1; --t) {
    Vec eps_hat = predict_noise(model, z, t, cond, cfg.guidance_scale);
    Vec z0 = estimate_z0(s, z, eps_hat, t);
    check_finite(z0, t);

    if (t == 1) {
      res.z0_hat = obs.op.combine_solution(obs.y, z0);
      if (cfg.record_diagnostics)
        res.diagnostics.push_back(
            {t, 1.0, 0.0, consistency_residual(obs.op, res.z0_hat, obs.y)});
      return res;
    }

    Vec z_gen = s.coef_z0(t) * z0 + s.coef_zt(t) * z +
                s.sigma(t) * rng.normal_vec(z.size());
    // known region: forward-noise A+ y to level t-1, then paste
    Vec z_known = forward_marginal(s, y_latent, t - 1, rng.normal_vec(z.size()));
    z = obs.op.range_project(z_known) + (z_gen - obs.op.range_project(z_gen));
    check_finite(z, t - 1);
    if (cfg.record_diagnostics)
      res.diagnostics.push_back({t, 1.0, s.sigma2(t), 0.0});
  }
  throw InvariantViolation("reverse loop fell through");
}

}  // namespace semcom
