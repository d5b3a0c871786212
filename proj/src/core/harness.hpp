#pragma once

#include "audio.hpp"
#include "channel.hpp"
#include "common.hpp"
#include "denoiser.hpp"
#include "metrics.hpp"
#include "sampler.hpp"
#include "schedule.hpp"
#include "tiny_denoiser.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace semcom {

enum class Task { Denoise, Inpaint };

// Where the working-noise estimate reads its input from: the received
// conditioning embedding or the unmasked latent coordinates.
enum class SigmaSource { Cond, Latent };

struct MixtureDataSpec {
  int dim = 160;
  int components = 4;
  double component_std = 0.05;
  // component means are sinusoids over the coordinate axis (smooth, so the
  // blind MAD estimator sees noise rather than signal structure)
  double mean_amplitude = M_SQRT2;
};

struct ToneDataSpec {
  std::vector<double> fundamentals = {220.0, 330.0, 440.0, 550.0};
  int harmonics = 2;
  double duration = 10.0;
  double sample_rate = 16000.0;
  int frame_len = 64;
  int retained = 16;
  std::string model_path;  // trained TinyDenoiser; required for run
};

struct ExperimentConfig {
  Task task = Task::Denoise;
  std::vector<double> psnr_grid = {15.0, 17.5, 20.0, 30.0};
  int trials = 100;
  uint64_t master_seed = 0;

  int schedule_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;

  double guidance_scale = 3.0;
  LambdaMode lambda_mode = LambdaMode::PosteriorGain;
  NoiseKnowledge noise_knowledge = NoiseKnowledge::KnownSigma;
  double manual_sigma = 0.0;
  SigmaSource sigma_source = SigmaSource::Latent;
  bool hard_snap_condition = false;

  // Inpaint only; the default start leaves the erased segment unaligned with
  // the frame grid, so edge frames enter the inpaint-region statistics
  ErasureSpec erasure = {0.47, 0.1};

  std::string data_type = "mixture";
  MixtureDataSpec mixture;
  ToneDataSpec tones;

  int frame_window = 8;
  int reference_samples = 512;

  int audition_wavs = 0;
  bool step_diagnostics = false;

  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);

struct TrialResult {
  Task task = Task::Denoise;
  double psnr_db = 0.0;
  int trial = 0;
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double snr_received_db = 0.0;
  double snr_restored_db = 0.0;
  double fd_all = 0.0;
  double fd_inp = std::numeric_limits<double>::quiet_NaN();
  double consistency_residual = 0.0;
  double sigma_y_star = 0.0;
  double wall_ms = 0.0;  // reported in the run log, never in trials.csv
};

// Source of clean latents plus the matching denoiser. Mixture data uses the
// analytic oracle; tone data runs through the DCT codec and a trained tiny
// network.
class DataModel {
 public:
  virtual ~DataModel() = default;
  virtual int dim() const = 0;
  // clean latent and its condition prototype
  virtual Vec sample_clean(Rng& rng, Vec* cond_out) const = 0;
  virtual const Denoiser& denoiser() const = 0;
  // decode a latent back to a waveform for audition output, if meaningful
  virtual std::optional<Vec> to_waveform(const Vec& latent) const { return std::nullopt; }
  virtual double wav_sample_rate() const { return 16000.0; }
};

std::unique_ptr<DataModel> make_data_model(const ExperimentConfig& cfg,
                                           const NoiseSchedule& schedule);

// Per-trial seeds: hash of (master seed, task, cell index, trial index), so
// any cell can be reproduced in isolation.
uint64_t trial_seed(const ExperimentConfig& cfg, int cell, int trial);

struct ExperimentContext {
  const ExperimentConfig* cfg;
  const NoiseSchedule* schedule;
  const DataModel* data;
  GaussianStats ref_all;            // clean frame stats, whole signal
  std::optional<GaussianStats> ref_inp;  // clean frame stats, erased region
  int inp_start = 0, inp_len = 0;   // erased coordinate range
};

ExperimentContext build_context(const ExperimentConfig& cfg,
                                const NoiseSchedule& schedule,
                                const DataModel& data);

TrialResult run_denoise_trial(const ExperimentContext& ctx, int cell, int trial);
TrialResult run_inpaint_trial(const ExperimentContext& ctx, int cell, int trial,
                              bool use_replace_baseline = false,
                              RestorationResult* restoration_out = nullptr);

struct GridResults {
  std::vector<TrialResult> trials;  // ordered by (cell, trial)
};

GridResults run_grid(const ExperimentConfig& cfg, const std::string& out_dir,
                     int workers);

void write_trials_csv(const std::string& path, const GridResults& results);
void write_summary_csv(const std::string& path, const ExperimentConfig& cfg,
                       const GridResults& results);
void write_series_csv(const std::string& path, const ExperimentConfig& cfg,
                      const GridResults& results);

// Built-in invariant sweep behind `semcom selftest`; prints one line per
// check and returns true when everything passes.
bool run_selftest(bool verbose = true);

// Trains a tiny denoiser per the config's data section and writes it to
// tones.model_path (or `out_path` if nonempty). Returns the final loss.
double train_denoiser_from_config(const std::string& json_text,
                                  const std::string& out_path);

}  // namespace semcom
