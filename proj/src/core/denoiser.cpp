#include "denoiser.hpp"

#include <cmath>
#include <limits>

namespace semcom {

void GaussianMixturePrior::validate() const {
  if (components() < 1 || dim() < 1) throw ConfigError("empty mixture prior");
  if (variances.rows() != means.rows() || variances.cols() != means.cols())
    throw ShapeError("mixture variances shape mismatch");
  if (weights.size() != components())
    throw ShapeError("mixture weights length mismatch");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw InvariantViolation("mixture weights must sum to 1");
  if ((variances.array() < 0.0).any())
    throw InvariantViolation("mixture variances must be nonnegative");
}

Vec GaussianMixturePrior::sample_component(int k, Rng& rng) const {
  if (k < 0 || k >= components()) throw ContractError("component index out of range");
  Vec z(dim());
  for (int i = 0; i < dim(); ++i)
    z[i] = means(k, i) + std::sqrt(variances(k, i)) * rng.normal();
  return z;
}

Vec GaussianMixturePrior::sample(Rng& rng, int* label_out) const {
  double u = rng.uniform();
  int k = components() - 1;
  double acc = 0.0;
  for (int i = 0; i < components(); ++i) {
    acc += weights[i];
    if (u <= acc) { k = i; break; }
  }
  if (label_out) *label_out = k;
  return sample_component(k, rng);
}

Vec predict_noise(const Denoiser& model, const Vec& z_t, int t,
                  const Condition& cond, double guidance_scale) {
  if (cond.is_null || guidance_scale == 0.0)
    return model.predict_raw(z_t, t, Condition::null_condition());
  if (guidance_scale == 1.0) return model.predict_raw(z_t, t, cond);
  Vec eps_u = model.predict_raw(z_t, t, Condition::null_condition());
  Vec eps_c = model.predict_raw(z_t, t, cond);
  return eps_u + guidance_scale * (eps_c - eps_u);
}

namespace {

// log N(z; m, v) summed over coordinates, diagonal v
double diag_gaussian_logpdf(const Vec& z, const Vec& m, const Vec& v) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double d = z[i] - m[i];
    acc += -0.5 * (std::log(2.0 * M_PI * v[i]) + d * d / v[i]);
  }
  return acc;
}

Vec posterior_mean_impl(const GaussianMixturePrior& prior, const NoiseSchedule& s,
                        const Vec& z_t, int t, const Vec& log_w) {
  const int K = prior.components();
  const int d = prior.dim();
  if (z_t.size() != d) throw ShapeError("mixture posterior: latent dimension mismatch");

  double ab = s.alpha_bar(t);
  double sab = s.sqrt_alpha_bar(t);
  double nv = 1.0 - ab;  // marginal noise variance at step t

  // log responsibilities: log w_k + log N(z_t; sqrt(abar) mu_k, abar S_k + (1-abar) I)
  Vec logr(K);
  for (int k = 0; k < K; ++k) {
    if (!std::isfinite(log_w[k])) { logr[k] = -std::numeric_limits<double>::infinity(); continue; }
    Vec m = sab * prior.means.row(k).transpose();
    Vec v = ab * prior.variances.row(k).transpose().array() + nv;
    logr[k] = log_w[k] + diag_gaussian_logpdf(z_t, m, v);
  }
  double mx = logr.maxCoeff();
  if (!std::isfinite(mx))
    throw InvariantViolation("all mixture responsibilities vanished");
  Vec r = (logr.array() - mx).exp();
  r /= r.sum();

  // per-component linear-Gaussian update, per coordinate:
  // E[z0 | z_t, k]_i = mu + sqrt(abar) s2 / (abar s2 + 1 - abar) * (z_t - sqrt(abar) mu)
  Vec mean = Vec::Zero(d);
  for (int k = 0; k < K; ++k) {
    if (r[k] == 0.0) continue;
    for (int i = 0; i < d; ++i) {
      double mu = prior.means(k, i);
      double s2 = prior.variances(k, i);
      double gain = sab * s2 / (ab * s2 + nv);
      mean[i] += r[k] * (mu + gain * (z_t[i] - sab * mu));
    }
  }
  if (!mean.allFinite())
    throw InvariantViolation("non-finite mixture posterior mean");
  return mean;
}

}  // namespace

Vec mixture_posterior_mean(const GaussianMixturePrior& prior, const NoiseSchedule& s,
                           const Vec& z_t, int t, std::optional<int> component) {
  prior.validate();
  Vec log_w(prior.components());
  if (component) {
    if (*component < 0 || *component >= prior.components())
      throw ContractError("component restriction out of range");
    log_w.setConstant(-std::numeric_limits<double>::infinity());
    log_w[*component] = 0.0;
  } else {
    for (int k = 0; k < prior.components(); ++k)
      log_w[k] = prior.weights[k] > 0.0
                     ? std::log(prior.weights[k])
                     : -std::numeric_limits<double>::infinity();
  }
  return posterior_mean_impl(prior, s, z_t, t, log_w);
}

Vec mixture_posterior_mean_weighted(const GaussianMixturePrior& prior,
                                    const NoiseSchedule& s, const Vec& z_t, int t,
                                    const Vec& log_weights) {
  if (log_weights.size() != prior.components())
    throw ShapeError("log-weight length mismatch");
  return posterior_mean_impl(prior, s, z_t, t, log_weights);
}

MixtureOracleDenoiser::MixtureOracleDenoiser(GaussianMixturePrior prior,
                                             const NoiseSchedule* schedule,
                                             double cond_noise_std, bool hard_snap)
    : prior_(std::move(prior)),
      schedule_(schedule),
      cond_noise_std_(cond_noise_std),
      hard_snap_(hard_snap) {
  prior_.validate();
  if (!schedule_) throw ConfigError("oracle denoiser needs a schedule");
}

Vec MixtureOracleDenoiser::component_log_weights(const Condition& cond) const {
  const int K = prior_.components();
  Vec log_w(K);
  if (cond.is_null) {
    for (int k = 0; k < K; ++k)
      log_w[k] = prior_.weights[k] > 0.0
                     ? std::log(prior_.weights[k])
                     : -std::numeric_limits<double>::infinity();
    return log_w;
  }
  if (cond.embedding.size() != prior_.dim())
    throw ShapeError("condition embedding dimension mismatch");

  double soft_sigma = cond.noise_std > 0.0 ? cond.noise_std : cond_noise_std_;
  if (hard_snap_ || soft_sigma <= 0.0) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      double dd = (cond.embedding - prior_.means.row(k).transpose()).squaredNorm();
      if (dd < best_d) { best_d = dd; best = k; }
    }
    log_w.setConstant(-std::numeric_limits<double>::infinity());
    log_w[best] = 0.0;
    return log_w;
  }

  // soft decode: p(k | c) with c = prototype_k + N(0, soft_sigma^2 I)
  double inv2v = 1.0 / (2.0 * soft_sigma * soft_sigma);
  for (int k = 0; k < K; ++k) {
    double dd = (cond.embedding - prior_.means.row(k).transpose()).squaredNorm();
    double lw = prior_.weights[k] > 0.0 ? std::log(prior_.weights[k])
                                        : -std::numeric_limits<double>::infinity();
    log_w[k] = lw - dd * inv2v;
  }
  return log_w;
}

Vec MixtureOracleDenoiser::posterior_mean(const Vec& z_t, int t,
                                          const Condition& cond) const {
  return posterior_mean_impl(prior_, *schedule_, z_t, t, component_log_weights(cond));
}

Vec MixtureOracleDenoiser::predict_raw(const Vec& z_t, int t,
                                       const Condition& cond) const {
  Vec m = posterior_mean(z_t, t, cond);
  return (z_t - schedule_->sqrt_alpha_bar(t) * m) /
         schedule_->sqrt_one_minus_alpha_bar(t);
}

}  // namespace semcom
