#pragma once

#include "common.hpp"
#include "schedule.hpp"

#include <optional>

namespace semcom {

// Conditioning embedding; prototypes live in latent space. The null
// condition requests an unconditional prediction.
struct Condition {
  Vec embedding;
  bool is_null = false;
  // noise level of the embedding after the channel, when known or estimated;
  // lets condition-aware backends decode a corrupted embedding softly
  double noise_std = 0.0;

  static Condition null_condition() { return {Vec(), true, 0.0}; }
  static Condition from(Vec e, double noise_std = 0.0) {
    return {std::move(e), false, noise_std};
  }
};

// Diagonal Gaussian mixture over clean latents. Component identity is the
// "semantics": each component mean doubles as its condition prototype.
struct GaussianMixturePrior {
  Mat means;     // K x d
  Mat variances; // K x d, per-coordinate
  Vec weights;   // sums to 1

  int components() const { return static_cast<int>(means.rows()); }
  int dim() const { return static_cast<int>(means.cols()); }

  void validate() const;

  Vec sample_component(int k, Rng& rng) const;
  Vec sample(Rng& rng, int* label_out = nullptr) const;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual int dim() const = 0;
  // eps prediction for a single branch (conditional or unconditional)
  virtual Vec predict_raw(const Vec& z_t, int t, const Condition& cond) const = 0;
};

// Classifier-free-style mixing: eps_u + s * (eps_c - eps_u). s == 1 is pure
// conditional, s == 0 pure unconditional (each evaluates one branch only).
Vec predict_noise(const Denoiser& model, const Vec& z_t, int t,
                  const Condition& cond, double guidance_scale);

// Exact denoiser for the mixture prior: E[z0 | z_t] in closed form,
// responsibilities evaluated in log space.
class MixtureOracleDenoiser : public Denoiser {
 public:
  // cond_noise_std > 0: soft responsibilities over components given a noisy
  // condition embedding; 0 (or hard_snap): snap to the nearest prototype.
  MixtureOracleDenoiser(GaussianMixturePrior prior, const NoiseSchedule* schedule,
                        double cond_noise_std = 0.0, bool hard_snap = false);

  int dim() const override { return prior_.dim(); }
  Vec predict_raw(const Vec& z_t, int t, const Condition& cond) const override;

  Vec posterior_mean(const Vec& z_t, int t, const Condition& cond) const;

  const GaussianMixturePrior& prior() const { return prior_; }

 private:
  Vec component_log_weights(const Condition& cond) const;

  GaussianMixturePrior prior_;
  const NoiseSchedule* schedule_;
  double cond_noise_std_;
  bool hard_snap_;
};

// E[z0 | z_t] for a diagonal mixture, optionally restricted to one component.
// Free-standing form used by tests and by the oracle denoiser.
Vec mixture_posterior_mean(const GaussianMixturePrior& prior, const NoiseSchedule& s,
                           const Vec& z_t, int t,
                           std::optional<int> component = std::nullopt);

// Same, with caller-supplied component log-weights replacing the prior weights.
Vec mixture_posterior_mean_weighted(const GaussianMixturePrior& prior,
                                    const NoiseSchedule& s, const Vec& z_t, int t,
                                    const Vec& log_weights);

}  // namespace semcom
