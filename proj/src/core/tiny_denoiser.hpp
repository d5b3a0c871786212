#pragma once

#include "common.hpp"
#include "denoiser.hpp"
#include "schedule.hpp"

#include <string>
#include <vector>

namespace semcom {

// Two affine layers with tanh in between, eps-prediction objective, gradients
// derived by hand. Input is [z_t, t/T, sqrt(abar_t), sqrt(1-abar_t), cond,
// cond_flag]; a null condition feeds zeros with cond_flag = 0.
class TinyDenoiser : public Denoiser {
 public:
  TinyDenoiser(int latent_dim, int cond_dim, int hidden,
               const NoiseSchedule* schedule);

  static TinyDenoiser random_init(int latent_dim, int cond_dim, int hidden,
                                  const NoiseSchedule* schedule, Rng& rng);

  int dim() const override { return latent_dim_; }
  int cond_dim() const { return cond_dim_; }
  int hidden() const { return hidden_; }
  int input_dim() const { return latent_dim_ + 3 + cond_dim_ + 1; }
  int param_count() const { return static_cast<int>(theta_.size()); }

  Vec& params() { return theta_; }
  const Vec& params() const { return theta_; }

  Vec predict_raw(const Vec& z_t, int t, const Condition& cond) const override;

  // Mean-squared eps-prediction loss over a batch, plus d(loss)/d(theta).
  // Exposed for training and for finite-difference verification.
  double loss_and_grad(const std::vector<Vec>& z_t, const std::vector<int>& t,
                       const std::vector<Condition>& cond,
                       const std::vector<Vec>& eps_true, Vec* grad) const;

  // Flat binary format with a versioned header; see save() for field order.
  void save(const std::string& path) const;
  static TinyDenoiser load(const std::string& path, const NoiseSchedule* schedule);

  const NoiseSchedule* schedule() const { return schedule_; }

 private:
  Vec build_input(const Vec& z_t, int t, const Condition& cond) const;
  // views into theta_
  Eigen::Map<const Mat> w1() const;
  Eigen::Map<const Vec> b1() const;
  Eigen::Map<const Mat> w2() const;
  Eigen::Map<const Vec> b2() const;

  int latent_dim_, cond_dim_, hidden_;
  const NoiseSchedule* schedule_;
  Vec theta_;
};

struct TrainHyper {
  double learning_rate = 1e-1;
  int epochs = 50;
  int batch_size = 64;
  uint64_t seed = 0;
  double cond_dropout = 0.1;  // fraction of samples trained unconditionally
};

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;     // mean training loss per epoch
  std::vector<double> holdout_losses;   // loss on a fixed held-out batch
};

// eps-prediction training on (z0, cond) pairs: draw t and eps, form z_t from
// the forward marginal, regress the noise. Plain SGD. Throws TrainingError on
// divergence (loss exceeding 10x the initial loss).
TrainReport train_tiny_denoiser(TinyDenoiser& model, const std::vector<Vec>& data,
                                const std::vector<Vec>& cond_prototypes,
                                const NoiseSchedule& s, const TrainHyper& hyper);

}  // namespace semcom
