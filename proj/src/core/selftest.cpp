#include "harness.hpp"

#include <json.hpp>

#include <cstdio>

namespace semcom {

using nlohmann::json;

namespace {

bool report(bool ok, const char* name, bool verbose) {
  if (verbose) std::printf("[%s] %s\n", ok ? "ok" : "FAIL", name);
  return ok;
}

bool check_schedule() {
  auto s = build_linear_schedule(1000, 1e-4, 2e-2);
  if (s.sigma2(1) != 0.0) return false;
  for (int t = 2; t <= s.steps; ++t) {
    if (!(s.alpha_bar(t) < s.alpha_bar(t - 1))) return false;
    double want = s.beta(t) * (1.0 - s.alpha_bar_prev(t)) / (1.0 - s.alpha_bar(t));
    if (std::abs(s.sigma2(t) - want) > 1e-14) return false;
  }
  return true;
}

bool check_linop() {
  Rng rng(7);
  Mat a(8, 16);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  auto op = DegradationOperator::dense(a);
  Vec z = rng.normal_vec(16);
  auto [range_part, null_part] = op.decompose(z);
  if ((range_part + null_part - z).cwiseAbs().maxCoeff() > 1e-10) return false;
  if (op.apply(null_part).cwiseAbs().maxCoeff() > 1e-9) return false;
  return true;
}

bool check_lambda_gamma() {
  auto s = build_linear_schedule(200, 1e-4, 2e-2);
  for (double sy : {0.0, 0.1, 1.0, 10.0}) {
    for (int t = 1; t <= s.steps; ++t) {
      auto [l, g] = lambda_gamma(s, t, sy, LambdaMode::PosteriorGain);
      double c = s.coef_z0(t);
      if (std::abs(c * l * sy * c * l * sy + g - s.sigma2(t)) > 1e-12) return false;
      if (!(l > 0.0 || (sy > 0.0 && s.sigma(t) == 0.0)) || l > 1.0) return false;
    }
  }
  return true;
}

bool check_frechet() {
  GaussianStats a, b;
  a.n = b.n = 10;
  a.mean = Vec::Zero(2);
  b.mean = (Vec(2) << 3.0, 4.0).finished();
  a.cov = b.cov = Mat::Identity(2, 2);
  if (std::abs(frechet_distance(a, b) - 25.0) > 1e-6) return false;
  return frechet_distance(a, a) < 1e-8;
}

bool check_channel() {
  Rng rng(11);
  Vec z = rng.normal_vec(4096);
  z *= 1.0 / std::sqrt(z.squaredNorm() / z.size());
  ChannelSpec spec;
  spec.psnr_db = 15.0;
  auto obs = transmit(z, Vec(), spec, rng);
  double sd = std::sqrt((obs.y - z).squaredNorm() / z.size());
  return std::abs(sd - 0.177828) < 0.02;
}

bool check_restore_determinism() {
  auto s = build_linear_schedule(60, 1e-4, 2e-2);
  GaussianMixturePrior prior;
  prior.means = Mat::Zero(1, 8);
  prior.variances = Mat::Constant(1, 8, 1.0);
  prior.weights = Vec::Constant(1, 1.0);
  MixtureOracleDenoiser model(prior, &s);
  Rng rng(3);
  Observation obs;
  obs.op = DegradationOperator::identity(8);
  obs.y = rng.normal_vec(8);
  RestorationConfig cfg;
  cfg.sigma_y = 1.0;
  cfg.seed = 99;
  auto r1 = restore(model, s, obs, cfg);
  auto r2 = restore(model, s, obs, cfg);
  return (r1.z0_hat.array() == r2.z0_hat.array()).all();
}

}  // namespace

bool run_selftest(bool verbose) {
  bool ok = true;
  ok &= report(check_schedule(), "schedule tables and posterior variance identity", verbose);
  ok &= report(check_linop(), "range/null decomposition on a random dense operator", verbose);
  ok &= report(check_lambda_gamma(), "lambda/gamma variance contract", verbose);
  ok &= report(check_frechet(), "Frechet distance closed forms", verbose);
  ok &= report(check_channel(), "channel PSNR calibration", verbose);
  ok &= report(check_restore_determinism(), "restore determinism under a fixed seed", verbose);
  if (verbose) std::printf("selftest: %s\n", ok ? "all checks passed" : "FAILURES");
  return ok;
}

double train_denoiser_from_config(const std::string& json_text,
                                  const std::string& out_path) {
  ExperimentConfig cfg = parse_experiment_config(json_text);
  NoiseSchedule schedule =
      build_linear_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);

  json j = json::parse(json_text);
  json tr = j.value("train", json::object());
  int hidden = tr.value("hidden", 64);
  int samples = tr.value("samples", 2000);
  TrainHyper hyper;
  hyper.learning_rate = tr.value("learning_rate", hyper.learning_rate);
  hyper.epochs = tr.value("epochs", hyper.epochs);
  hyper.batch_size = tr.value("batch_size", hyper.batch_size);
  hyper.seed = tr.value("seed", cfg.master_seed);
  hyper.cond_dropout = tr.value("cond_dropout", hyper.cond_dropout);

  std::vector<Vec> data, protos;
  Rng rng(mix_seed(hyper.seed, 0x64617461ULL));
  if (cfg.data_type == "tones") {
    // generate latents straight from the tone classes; no trained model needed
    ToneDataSpec spec = cfg.tones;
    FrameCodec codec = FrameCodec::dct(spec.frame_len, spec.retained);
    std::vector<Vec> class_protos;
    for (size_t c = 0; c < spec.fundamentals.size(); ++c) {
      ToneSpec t;
      t.f0 = spec.fundamentals[c];
      t.harmonics = spec.harmonics;
      t.amplitudes.resize(spec.harmonics);
      for (int h = 0; h < spec.harmonics; ++h) t.amplitudes[h] = 1.0 / (h + 1);
      t.duration = spec.duration;
      t.sample_rate = spec.sample_rate;
      Vec proto = Vec::Zero(0);
      for (int rep = 0; rep < 16; ++rep) {
        Vec lat = codec.encode(synth(t, rng));
        if (proto.size() == 0) proto = Vec::Zero(lat.size());
        proto += lat;
      }
      class_protos.push_back(proto / 16.0);
    }
    for (int i = 0; i < samples; ++i) {
      auto c = static_cast<size_t>(rng.uniform() * spec.fundamentals.size());
      if (c >= spec.fundamentals.size()) c = spec.fundamentals.size() - 1;
      ToneSpec t;
      t.f0 = spec.fundamentals[c];
      t.harmonics = spec.harmonics;
      t.amplitudes.resize(spec.harmonics);
      for (int h = 0; h < spec.harmonics; ++h) t.amplitudes[h] = 1.0 / (h + 1);
      t.duration = spec.duration;
      t.sample_rate = spec.sample_rate;
      data.push_back(codec.encode(synth(t, rng)));
      protos.push_back(class_protos[c]);
    }
  } else {
    auto model = make_data_model(cfg, schedule);
    for (int i = 0; i < samples; ++i) {
      Vec proto;
      data.push_back(model->sample_clean(rng, &proto));
      protos.push_back(std::move(proto));
    }
  }

  int d = static_cast<int>(data.front().size());
  Rng init_rng(mix_seed(hyper.seed, 0x696e6974ULL));
  TinyDenoiser model = TinyDenoiser::random_init(d, d, hidden, &schedule, init_rng);
  TrainReport report = train_tiny_denoiser(model, data, protos, schedule, hyper);

  std::string path = out_path.empty() ? cfg.tones.model_path : out_path;
  if (path.empty()) throw ConfigError("no output path for the trained model");
  model.save(path);
  return report.final_loss;
}

}  // namespace semcom
