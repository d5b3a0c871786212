#include "harness.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace semcom {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  if (psnr_grid.empty()) throw ConfigError("psnr_grid must be nonempty");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (schedule_steps < 2) throw ConfigError("schedule_steps must be >= 2");
  if (frame_window < 1) throw ConfigError("frame_window must be positive");
  if (reference_samples < 2) throw ConfigError("reference_samples must be >= 2");
  if (data_type != "mixture" && data_type != "tones")
    throw ConfigError("data.type must be 'mixture' or 'tones'");
  if (task == Task::Inpaint) {
    if (erasure.length_fraction <= 0.0)
      throw ConfigError("inpainting needs a positive erasure length");
    if (erasure.start_fraction < 0.0 ||
        erasure.start_fraction + erasure.length_fraction > 1.0)
      throw ConfigError("erasure segment must fit in [0,1]");
  }
}

namespace {

double parse_psnr(const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    throw ConfigError("psnr values must be numbers or \"inf\"");
  }
  return v.get<double>();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  try {
    if (j.contains("task")) {
      std::string t = j["task"];
      if (t == "denoise") cfg.task = Task::Denoise;
      else if (t == "inpaint") cfg.task = Task::Inpaint;
      else throw ConfigError("task must be 'denoise' or 'inpaint'");
    }
    if (j.contains("psnr_grid")) {
      cfg.psnr_grid.clear();
      for (const auto& v : j["psnr_grid"]) cfg.psnr_grid.push_back(parse_psnr(v));
    }
    cfg.trials = j.value("trials", cfg.trials);
    cfg.master_seed = j.value("seed", cfg.master_seed);

    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      cfg.schedule_steps = s.value("steps", cfg.schedule_steps);
      cfg.beta_start = s.value("beta_start", cfg.beta_start);
      cfg.beta_end = s.value("beta_end", cfg.beta_end);
    }
    if (j.contains("restoration")) {
      const auto& r = j["restoration"];
      cfg.guidance_scale = r.value("guidance_scale", cfg.guidance_scale);
      std::string m = r.value("lambda_mode", "posterior");
      if (m == "posterior") cfg.lambda_mode = LambdaMode::PosteriorGain;
      else if (m == "noise_ratio") cfg.lambda_mode = LambdaMode::NoiseRatio;
      else if (m == "exact_zero_gamma") cfg.lambda_mode = LambdaMode::ExactZeroGamma;
      else
        throw ConfigError(
            "lambda_mode must be 'posterior', 'noise_ratio', or "
            "'exact_zero_gamma'");
    }
    std::string nk = j.value("noise_knowledge", "known");
    if (nk == "known") cfg.noise_knowledge = NoiseKnowledge::KnownSigma;
    else if (nk == "adaptive") cfg.noise_knowledge = NoiseKnowledge::BlindAdaptive;
    else if (nk == "manual") cfg.noise_knowledge = NoiseKnowledge::Manual;
    else throw ConfigError("noise_knowledge must be known/adaptive/manual");
    cfg.manual_sigma = j.value("manual_sigma", cfg.manual_sigma);

    // inpainting reads the working noise level off the received conditioning
    // embedding by default; denoising reads it off the latent itself
    std::string ss = j.value("sigma_source",
                             cfg.task == Task::Inpaint ? "cond" : "latent");
    if (ss == "cond") cfg.sigma_source = SigmaSource::Cond;
    else if (ss == "latent") cfg.sigma_source = SigmaSource::Latent;
    else throw ConfigError("sigma_source must be 'cond' or 'latent'");
    cfg.hard_snap_condition = j.value("hard_snap_condition", false);

    if (j.contains("erasure")) {
      const auto& e = j["erasure"];
      cfg.erasure.start_fraction = e.value("start_fraction", cfg.erasure.start_fraction);
      cfg.erasure.length_fraction = e.value("length_fraction", cfg.erasure.length_fraction);
    }
    if (j.contains("data")) {
      const auto& d = j["data"];
      cfg.data_type = d.value("type", cfg.data_type);
      if (cfg.data_type == "mixture") {
        cfg.mixture.dim = d.value("dim", cfg.mixture.dim);
        cfg.mixture.components = d.value("components", cfg.mixture.components);
        cfg.mixture.component_std = d.value("component_std", cfg.mixture.component_std);
        cfg.mixture.mean_amplitude = d.value("mean_amplitude", cfg.mixture.mean_amplitude);
      } else if (cfg.data_type == "tones") {
        if (d.contains("fundamentals"))
          cfg.tones.fundamentals = d["fundamentals"].get<std::vector<double>>();
        cfg.tones.harmonics = d.value("harmonics", cfg.tones.harmonics);
        cfg.tones.duration = d.value("duration", cfg.tones.duration);
        cfg.tones.sample_rate = d.value("sample_rate", cfg.tones.sample_rate);
        cfg.tones.frame_len = d.value("frame_len", cfg.tones.frame_len);
        cfg.tones.retained = d.value("retained", cfg.tones.retained);
        cfg.tones.model_path = d.value("model", cfg.tones.model_path);
      }
    }
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      cfg.frame_window = m.value("frame_window", cfg.frame_window);
      cfg.reference_samples = m.value("reference_samples", cfg.reference_samples);
    }
    cfg.audition_wavs = j.value("audition_wavs", cfg.audition_wavs);
    cfg.step_diagnostics = j.value("step_diagnostics", cfg.step_diagnostics);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }

  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// data models

namespace {

GaussianMixturePrior make_sinusoid_mixture(const MixtureDataSpec& spec) {
  if (spec.dim < 16) throw ConfigError("mixture dim must be >= 16");
  if (spec.components < 1) throw ConfigError("mixture needs components");
  GaussianMixturePrior prior;
  int K = spec.components, d = spec.dim;
  prior.means.resize(K, d);
  prior.variances = Mat::Constant(K, d, spec.component_std * spec.component_std);
  prior.weights = Vec::Constant(K, 1.0 / K);
  for (int k = 0; k < K; ++k) {
    double freq = k + 1;
    double phase = 0.37 * (k + 1);  // fixed, just decorrelates the components
    for (int i = 0; i < d; ++i)
      prior.means(k, i) =
          spec.mean_amplitude * std::sin(2.0 * M_PI * freq * i / d + phase);
  }
  prior.validate();
  return prior;
}

class MixtureDataModel : public DataModel {
 public:
  MixtureDataModel(const MixtureDataSpec& spec, const NoiseSchedule& s,
                   bool hard_snap)
      : oracle_(make_sinusoid_mixture(spec), &s, 0.0, hard_snap) {}

  int dim() const override { return oracle_.dim(); }

  Vec sample_clean(Rng& rng, Vec* cond_out) const override {
    int label = 0;
    Vec z = oracle_.prior().sample(rng, &label);
    if (cond_out) *cond_out = oracle_.prior().means.row(label).transpose();
    return z;
  }

  const Denoiser& denoiser() const override { return oracle_; }

 private:
  MixtureOracleDenoiser oracle_;
};

class ToneDataModel : public DataModel {
 public:
  ToneDataModel(const ToneDataSpec& spec, const NoiseSchedule& s)
      : spec_(spec), codec_(FrameCodec::dct(spec.frame_len, spec.retained)) {
    if (spec_.fundamentals.empty()) throw ConfigError("tone data needs fundamentals");
    auto n_samples = static_cast<Eigen::Index>(
        std::lround(spec_.duration * spec_.sample_rate));
    dim_ = codec_.frames_for(n_samples) * codec_.retained();

    // class prototypes: mean latent over a handful of phase draws
    Rng rng(0x70726f746fULL);
    for (size_t c = 0; c < spec_.fundamentals.size(); ++c) {
      Vec proto = Vec::Zero(dim_);
      for (int rep = 0; rep < 16; ++rep)
        proto += codec_.encode(synth(tone_spec(c), rng));
      prototypes_.push_back(proto / 16.0);
    }

    if (spec_.model_path.empty())
      throw ConfigError("tone data needs a trained model path (data.model)");
    model_ = std::make_unique<TinyDenoiser>(
        TinyDenoiser::load(spec_.model_path, &s));
    if (model_->dim() != dim_ || model_->cond_dim() != dim_)
      throw ConfigError("trained model dimensions do not match tone data");
  }

  ToneSpec tone_spec(size_t cls) const {
    ToneSpec t;
    t.f0 = spec_.fundamentals[cls];
    t.harmonics = spec_.harmonics;
    t.amplitudes.resize(spec_.harmonics);
    for (int h = 0; h < spec_.harmonics; ++h) t.amplitudes[h] = 1.0 / (h + 1);
    t.duration = spec_.duration;
    t.sample_rate = spec_.sample_rate;
    return t;
  }

  int dim() const override { return dim_; }

  Vec sample_clean(Rng& rng, Vec* cond_out) const override {
    auto cls = static_cast<size_t>(rng.uniform() * spec_.fundamentals.size());
    if (cls >= spec_.fundamentals.size()) cls = spec_.fundamentals.size() - 1;
    if (cond_out) *cond_out = prototypes_[cls];
    return codec_.encode(synth(tone_spec(cls), rng));
  }

  const Denoiser& denoiser() const override { return *model_; }

  std::optional<Vec> to_waveform(const Vec& latent) const override {
    return codec_.decode(latent);
  }
  double wav_sample_rate() const override { return spec_.sample_rate; }

  const FrameCodec& codec() const { return codec_; }
  const std::vector<Vec>& prototypes() const { return prototypes_; }

 private:
  ToneDataSpec spec_;
  FrameCodec codec_;
  int dim_ = 0;
  std::vector<Vec> prototypes_;
  std::unique_ptr<TinyDenoiser> model_;
};

}  // namespace

std::unique_ptr<DataModel> make_data_model(const ExperimentConfig& cfg,
                                           const NoiseSchedule& schedule) {
  if (cfg.data_type == "mixture")
    return std::make_unique<MixtureDataModel>(cfg.mixture, schedule,
                                              cfg.hard_snap_condition);
  return std::make_unique<ToneDataModel>(cfg.tones, schedule);
}

// ---------------------------------------------------------------------------
// trials

uint64_t trial_seed(const ExperimentConfig& cfg, int cell, int trial) {
  uint64_t task_id = cfg.task == Task::Denoise ? 1 : 2;
  return mix_seed(cfg.master_seed,
                  mix_seed(task_id, mix_seed(static_cast<uint64_t>(cell),
                                             static_cast<uint64_t>(trial))));
}

ExperimentContext build_context(const ExperimentConfig& cfg,
                                const NoiseSchedule& schedule,
                                const DataModel& data) {
  ExperimentContext ctx;
  ctx.cfg = &cfg;
  ctx.schedule = &schedule;
  ctx.data = &data;

  Rng rng(mix_seed(cfg.master_seed, 0x52454653ULL));  // reference stream
  std::vector<Vec> all_feats, inp_feats;
  int d = data.dim();
  if (cfg.task == Task::Inpaint) {
    ctx.inp_start = static_cast<int>(std::lround(cfg.erasure.start_fraction * d));
    ctx.inp_len = static_cast<int>(std::lround(cfg.erasure.length_fraction * d));
    ctx.inp_len = std::min(ctx.inp_len, d - ctx.inp_start);
  }
  for (int i = 0; i < cfg.reference_samples; ++i) {
    Vec z = data.sample_clean(rng, nullptr);
    for (auto& f : region_features(z, 0, d, cfg.frame_window))
      all_feats.push_back(std::move(f));
    if (cfg.task == Task::Inpaint)
      for (auto& f : region_features(z, ctx.inp_start, ctx.inp_len, cfg.frame_window))
        inp_feats.push_back(std::move(f));
  }
  ctx.ref_all = fit_stats(all_feats);
  if (cfg.task == Task::Inpaint) ctx.ref_inp = fit_stats(inp_feats);
  return ctx;
}

namespace {

Vec kept_coordinates(const Vec& y, const std::vector<uint8_t>& kept) {
  Vec out(y.size());
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (kept[i]) out[n++] = y[i];
  return out.head(n).eval();
}

// Base noise std (known, blind, or manual), before the range rescale.
double base_sigma(const ExperimentConfig& cfg, const Observation& obs,
                  const Vec& source, bool source_is_cond) {
  switch (cfg.noise_knowledge) {
    case NoiseKnowledge::Manual:
      return cfg.manual_sigma;
    case NoiseKnowledge::KnownSigma:
      return source_is_cond ? obs.cond_sigma_true.value_or(0.0)
                            : obs.sigma_y_true.value_or(0.0);
    case NoiseKnowledge::BlindAdaptive:
      return estimate_noise_std(source);
  }
  throw InvariantViolation("unreachable noise knowledge");
}

// Working sigma*_y fed to the sampler. Manual values are taken verbatim;
// known and blind stds both go through the same range rescale.
double working_sigma_star(const ExperimentConfig& cfg, const Observation& obs) {
  bool use_cond =
      cfg.sigma_source == SigmaSource::Cond && obs.cond_received.size() > 0;
  Vec source = use_cond ? obs.cond_received
                        : kept_coordinates(obs.y, obs.op.kept_flags());
  double base = base_sigma(cfg, obs, source, use_cond);
  if (cfg.noise_knowledge == NoiseKnowledge::Manual) return base;
  return adaptive_sigma_y(source, base);
}

double cond_noise_hint(const ExperimentConfig& cfg, const Observation& obs) {
  if (obs.cond_received.size() == 0) return 0.0;
  if (obs.cond_sigma_true) return *obs.cond_sigma_true;
  if (cfg.noise_knowledge == NoiseKnowledge::BlindAdaptive) {
    try {
      return estimate_noise_std(obs.cond_received);
    } catch (const EstimationError&) {
      return 0.0;
    }
  }
  return 0.0;
}

double final_residual(const RestorationResult& res) {
  return res.diagnostics.empty() ? 0.0 : res.diagnostics.back().residual;
}

TrialResult run_trial_impl(const ExperimentContext& ctx, int cell, int trial,
                           bool inpaint, bool use_replace_baseline,
                           RestorationResult* restoration_out) {
  const ExperimentConfig& cfg = *ctx.cfg;
  TrialResult r;
  r.task = cfg.task;
  r.psnr_db = cfg.psnr_grid.at(cell);
  r.trial = trial;
  r.seed = trial_seed(cfg, cell, trial);

  auto t0 = std::chrono::steady_clock::now();
  try {
    Rng rng(r.seed);
    Vec cond_clean;
    Vec z0 = ctx.data->sample_clean(rng, &cond_clean);

    ChannelSpec spec;
    // inpainting erases a segment on top of the same noisy channel; the
    // conditioning sees AWGN at the cell PSNR in both tasks
    spec.erasure = inpaint ? std::optional<ErasureSpec>(cfg.erasure) : std::nullopt;
    spec.knowledge = cfg.noise_knowledge;
    spec.manual_sigma = cfg.manual_sigma;
    spec.psnr_db = r.psnr_db;

    Observation obs = transmit(z0, cond_clean, spec, rng);
    obs.cond_noise_std_hint = cond_noise_hint(cfg, obs);
    r.sigma_y_star = working_sigma_star(cfg, obs);

    RestorationConfig rc;
    rc.guidance_scale = cfg.guidance_scale;
    rc.sigma_y = r.sigma_y_star;
    rc.lambda_mode = cfg.lambda_mode;
    rc.seed = mix_seed(r.seed, 0x73616d70ULL);

    RestorationResult res = use_replace_baseline
                                ? replace_baseline(ctx.data->denoiser(),
                                                   *ctx.schedule, obs, rc)
                                : restore(ctx.data->denoiser(), *ctx.schedule,
                                          obs, rc);

    r.snr_received_db = snr_db(z0, obs.y);
    r.snr_restored_db = snr_db(z0, res.z0_hat);

    auto feats = region_features(res.z0_hat, 0, ctx.data->dim(), cfg.frame_window);
    r.fd_all = frechet_distance(fit_stats(feats), ctx.ref_all);
    if (inpaint && ctx.ref_inp) {
      auto inp_feats = region_features(res.z0_hat, ctx.inp_start, ctx.inp_len,
                                       cfg.frame_window);
      r.fd_inp = frechet_distance(fit_stats(inp_feats), *ctx.ref_inp);
    }
    r.consistency_residual = final_residual(res);
    if (restoration_out) *restoration_out = std::move(res);
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  return r;
}

}  // namespace

TrialResult run_denoise_trial(const ExperimentContext& ctx, int cell, int trial) {
  if (ctx.cfg->task != Task::Denoise)
    throw ContractError("run_denoise_trial on a non-denoise config");
  return run_trial_impl(ctx, cell, trial, false, false, nullptr);
}

TrialResult run_inpaint_trial(const ExperimentContext& ctx, int cell, int trial,
                              bool use_replace_baseline,
                              RestorationResult* restoration_out) {
  if (ctx.cfg->task != Task::Inpaint)
    throw ContractError("run_inpaint_trial on a non-inpaint config");
  return run_trial_impl(ctx, cell, trial, true, use_replace_baseline,
                        restoration_out);
}

// ---------------------------------------------------------------------------
// grid + persistence

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* task_name(Task t) { return t == Task::Denoise ? "denoise" : "inpaint"; }

struct CellStats {
  int n_ok = 0, n_failed = 0;
  double snr_recv = 0, snr_recv2 = 0;
  double snr_rest = 0, snr_rest2 = 0;
  double fd_all = 0, fd_all2 = 0;
  double fd_inp = 0, fd_inp2 = 0;
  int n_fd_inp = 0;
  double sigma_star = 0;

  void add(const TrialResult& t) {
    if (!t.ok) { ++n_failed; return; }
    ++n_ok;
    snr_recv += t.snr_received_db; snr_recv2 += t.snr_received_db * t.snr_received_db;
    snr_rest += t.snr_restored_db; snr_rest2 += t.snr_restored_db * t.snr_restored_db;
    fd_all += t.fd_all; fd_all2 += t.fd_all * t.fd_all;
    if (std::isfinite(t.fd_inp)) {
      fd_inp += t.fd_inp; fd_inp2 += t.fd_inp * t.fd_inp; ++n_fd_inp;
    }
    sigma_star += t.sigma_y_star;
  }
  static double mean(double s, int n) { return n > 0 ? s / n : std::nan(""); }
  static double stddev(double s, double s2, int n) {
    if (n < 2) return std::nan("");
    double m = s / n;
    double v = (s2 - n * m * m) / (n - 1);
    return std::sqrt(std::max(v, 0.0));
  }
};

}  // namespace

void write_trials_csv(const std::string& path, const GridResults& results) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f << "task,psnr_db,trial,seed,status,snr_received_db,snr_restored_db,"
       "fd_all,fd_inp,consistency_residual,sigma_y_star\n";
  for (const auto& t : results.trials) {
    f << task_name(t.task) << ',' << fmt(t.psnr_db) << ',' << t.trial << ','
      << t.seed << ',' << (t.ok ? "ok" : "failed") << ','
      << fmt(t.snr_received_db) << ',' << fmt(t.snr_restored_db) << ','
      << fmt(t.fd_all) << ',' << fmt(t.fd_inp) << ','
      << fmt(t.consistency_residual) << ',' << fmt(t.sigma_y_star) << '\n';
  }
}

void write_summary_csv(const std::string& path, const ExperimentConfig& cfg,
                       const GridResults& results) {
  std::vector<CellStats> cells(cfg.psnr_grid.size());
  for (const auto& t : results.trials)
    for (size_t c = 0; c < cfg.psnr_grid.size(); ++c)
      if (t.psnr_db == cfg.psnr_grid[c]) { cells[c].add(t); break; }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f << "task,psnr_db,n_ok,n_failed,snr_received_mean,snr_received_std,"
       "snr_restored_mean,snr_restored_std,fd_all_mean,fd_all_std,"
       "fd_inp_mean,fd_inp_std,sigma_y_star_mean\n";
  for (size_t c = 0; c < cfg.psnr_grid.size(); ++c) {
    const auto& s = cells[c];
    f << task_name(cfg.task) << ',' << fmt(cfg.psnr_grid[c]) << ',' << s.n_ok
      << ',' << s.n_failed << ','
      << fmt(CellStats::mean(s.snr_recv, s.n_ok)) << ','
      << fmt(CellStats::stddev(s.snr_recv, s.snr_recv2, s.n_ok)) << ','
      << fmt(CellStats::mean(s.snr_rest, s.n_ok)) << ','
      << fmt(CellStats::stddev(s.snr_rest, s.snr_rest2, s.n_ok)) << ','
      << fmt(CellStats::mean(s.fd_all, s.n_ok)) << ','
      << fmt(CellStats::stddev(s.fd_all, s.fd_all2, s.n_ok)) << ','
      << fmt(CellStats::mean(s.fd_inp, s.n_fd_inp)) << ','
      << fmt(CellStats::stddev(s.fd_inp, s.fd_inp2, s.n_fd_inp)) << ','
      << fmt(CellStats::mean(s.sigma_star, s.n_ok)) << '\n';
  }
}

void write_series_csv(const std::string& path, const ExperimentConfig& cfg,
                      const GridResults& results) {
  std::vector<CellStats> cells(cfg.psnr_grid.size());
  for (const auto& t : results.trials)
    for (size_t c = 0; c < cfg.psnr_grid.size(); ++c)
      if (t.psnr_db == cfg.psnr_grid[c]) { cells[c].add(t); break; }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f << "psnr_db,metric,mean,std\n";
  auto row = [&](double psnr, const char* name, double m, double sd) {
    f << fmt(psnr) << ',' << name << ',' << fmt(m) << ',' << fmt(sd) << '\n';
  };
  for (size_t c = 0; c < cfg.psnr_grid.size(); ++c) {
    const auto& s = cells[c];
    double p = cfg.psnr_grid[c];
    row(p, "snr_received_db", CellStats::mean(s.snr_recv, s.n_ok),
        CellStats::stddev(s.snr_recv, s.snr_recv2, s.n_ok));
    row(p, "snr_restored_db", CellStats::mean(s.snr_rest, s.n_ok),
        CellStats::stddev(s.snr_rest, s.snr_rest2, s.n_ok));
    row(p, "fd_all", CellStats::mean(s.fd_all, s.n_ok),
        CellStats::stddev(s.fd_all, s.fd_all2, s.n_ok));
    if (cfg.task == Task::Inpaint)
      row(p, "fd_inp", CellStats::mean(s.fd_inp, s.n_fd_inp),
          CellStats::stddev(s.fd_inp, s.fd_inp2, s.n_fd_inp));
  }
}

GridResults run_grid(const ExperimentConfig& cfg, const std::string& out_dir,
                     int workers) {
  cfg.validate();
  fs::create_directories(out_dir);

  NoiseSchedule schedule =
      build_linear_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);
  auto data = make_data_model(cfg, schedule);
  ExperimentContext ctx = build_context(cfg, schedule, *data);

  const int n_cells = static_cast<int>(cfg.psnr_grid.size());
  const int n_jobs = n_cells * cfg.trials;
  GridResults results;
  results.trials.resize(n_jobs);

  std::vector<RestorationResult> kept_restorations;
  std::vector<int> audition_jobs;  // job indices whose restoration we keep
  if (cfg.audition_wavs > 0) {
    for (int c = 0; c < n_cells; ++c)
      for (int t = 0; t < std::min(cfg.audition_wavs, cfg.trials); ++t)
        audition_jobs.push_back(c * cfg.trials + t);
    kept_restorations.resize(audition_jobs.size());
  }
  auto audition_slot = [&](int job) -> RestorationResult* {
    for (size_t i = 0; i < audition_jobs.size(); ++i)
      if (audition_jobs[i] == job) return &kept_restorations[i];
    return nullptr;
  };

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int job = next.fetch_add(1);
      if (job >= n_jobs) return;
      int cell = job / cfg.trials;
      int trial = job % cfg.trials;
      RestorationResult* slot = audition_slot(job);
      results.trials[job] =
          run_trial_impl(ctx, cell, trial, cfg.task == Task::Inpaint, false, slot);
    }
  };

  int n_workers = std::max(1, workers);
  std::vector<std::thread> pool;
  pool.reserve(n_workers - 1);
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  write_trials_csv(out_dir + "/trials.csv", results);
  write_summary_csv(out_dir + "/summary.csv", cfg, results);
  write_series_csv(out_dir + "/series.csv", cfg, results);

  if (cfg.step_diagnostics) {
    fs::create_directories(out_dir + "/diagnostics");
    // re-run the first trial of each cell with diagnostics kept
    for (int c = 0; c < n_cells; ++c) {
      RestorationResult res;
      TrialResult t =
          run_trial_impl(ctx, c, 0, cfg.task == Task::Inpaint, false, &res);
      if (!t.ok) continue;
      std::ofstream f(out_dir + "/diagnostics/cell" + std::to_string(c) +
                      "_trial0.csv");
      f << "step,lambda,gamma,residual\n";
      for (const auto& d : res.diagnostics)
        f << d.t << ',' << fmt(d.lambda) << ',' << fmt(d.gamma) << ','
          << fmt(d.residual) << '\n';
    }
  }

  if (cfg.audition_wavs > 0) {
    fs::create_directories(out_dir + "/audition");
    for (size_t i = 0; i < audition_jobs.size(); ++i) {
      int job = audition_jobs[i];
      if (!results.trials[job].ok) continue;
      auto wav = data->to_waveform(kept_restorations[i].z0_hat);
      if (!wav) continue;
      int cell = job / cfg.trials, trial = job % cfg.trials;
      write_wav(out_dir + "/audition/cell" + std::to_string(cell) + "_trial" +
                    std::to_string(trial) + ".wav",
                *wav, static_cast<int>(data->wav_sample_rate()));
    }
  }

  return results;
}

}  // namespace semcom
