#include <doctest.h>

#include "core/sampler.hpp"

using namespace semcom;

namespace {

GaussianMixturePrior pair_prior(const Vec& mu, double var) {
  GaussianMixturePrior p;
  p.means.resize(2, mu.size());
  p.means.row(0) = mu.transpose();
  p.means.row(1) = -mu.transpose();
  p.variances = Mat::Constant(2, mu.size(), var);
  p.weights = Vec::Constant(2, 0.5);
  return p;
}

struct NanDenoiser : Denoiser {
  int d;
  explicit NanDenoiser(int d) : d(d) {}
  int dim() const override { return d; }
  Vec predict_raw(const Vec&, int, const Condition&) const override {
    return Vec::Constant(d, std::nan(""));
  }
};

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("noiseless limit of the step coefficients") {
  auto s = build_linear_schedule(200, 1e-4, 2e-2);
  for (int t = 1; t <= 200; ++t) {
    auto [l, g] = lambda_gamma(s, t, 0.0, LambdaMode::PosteriorGain);
    CHECK(l == 1.0);
    CHECK(g == s.sigma2(t));
  }
}

TEST_CASE("variance contract holds across noise levels and modes") {
  auto s = build_linear_schedule(300, 1e-4, 2e-2);
  for (auto mode : {LambdaMode::PosteriorGain, LambdaMode::NoiseRatio,
                    LambdaMode::ExactZeroGamma}) {
    for (double sy : {0.1, 1.0, 10.0}) {
      for (int t = 1; t <= 300; ++t) {
        auto [l, g] = lambda_gamma(s, t, sy, mode);
        double c = s.coef_z0(t);
        double scaled = c * l * sy;
        CHECK(std::abs(scaled * scaled + g - s.sigma2(t)) <= 1e-12);
        CHECK((l > 0.0 || s.sigma(t) == 0.0));
        CHECK(l <= 1.0);
        CHECK(g >= 0.0);
      }
    }
  }
}

TEST_CASE("exact-zero mode cancels the noise in the clamped branch") {
  auto s = build_linear_schedule(300, 1e-4, 2e-2);
  double sy = 5.0;
  int clamped = 0;
  for (int t = 1; t <= 300; ++t) {
    auto [l, g] = lambda_gamma(s, t, sy, LambdaMode::ExactZeroGamma);
    if (l < 1.0) {
      CHECK(g == 0.0);
      ++clamped;
    }
  }
  CHECK(clamped > 0);
}

TEST_CASE("identity observation is reproduced exactly without noise") {
  auto s = build_linear_schedule(100, 1e-4, 2e-2);
  auto prior = pair_prior((Vec(6) << 1, -1, 0.5, 2, -0.3, 0.8).finished(), 0.2);
  MixtureOracleDenoiser model(prior, &s);
  Rng rng(5);
  Observation obs;
  obs.op = DegradationOperator::identity(6);
  obs.y = prior.means.row(0).transpose() + 0.1 * rng.normal_vec(6);
  RestorationConfig cfg;
  cfg.seed = 17;
  auto res = restore(model, s, obs, cfg);
  CHECK((obs.op.apply(res.z0_hat) - obs.y).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(res.diagnostics.size() == 100);
  CHECK(res.diagnostics.back().t == 1);
}

TEST_CASE("zero-noise restore is bit-identical to the literal recombination path") {
  auto s = build_linear_schedule(150, 1e-4, 2e-2);
  auto prior = pair_prior((Vec(10) << 1, 2, -1, 0.5, 0, 1, -2, 0.3, 0.9, -0.4)
                              .finished(),
                          0.1);
  MixtureOracleDenoiser model(prior, &s);
  Rng rng(9);
  Observation obs;
  obs.op = DegradationOperator::segment_mask(10, 4, 2);
  obs.y = obs.op.apply(prior.means.row(1).transpose() + 0.2 * rng.normal_vec(10));
  obs.cond_received = prior.means.row(1).transpose();
  RestorationConfig cfg;
  cfg.seed = 1234;
  auto a = restore(model, s, obs, cfg);
  auto b = restore_noiseless(model, s, obs, cfg);
  REQUIRE(a.z0_hat.size() == b.z0_hat.size());
  CHECK((a.z0_hat.array() == b.z0_hat.array()).all());
  REQUIRE(a.diagnostics.size() == b.diagnostics.size());
  for (size_t i = 0; i < a.diagnostics.size(); ++i) {
    CHECK(a.diagnostics[i].lambda == b.diagnostics[i].lambda);
    CHECK(a.diagnostics[i].gamma == b.diagnostics[i].gamma);
  }
  CHECK_THROWS_AS(
      {
        cfg.sigma_y = 1.0;
        restore_noiseless(model, s, obs, cfg);
      },
      ContractError);
}

TEST_CASE("masked restoration keeps observed coordinates and fills plausibly") {
  auto s = build_linear_schedule(200, 1e-4, 2e-2);
  const int d = 40;
  Vec mu(d);
  for (int i = 0; i < d; ++i) mu[i] = std::sin(0.3 * i);
  auto prior = pair_prior(mu, 0.01);
  MixtureOracleDenoiser model(prior, &s);

  Rng rng(3);
  Vec z0 = prior.means.row(0).transpose() + 0.1 * rng.normal_vec(d);
  auto op = DegradationOperator::segment_mask(d, 18, 4);  // 10% dropped
  Observation obs;
  obs.op = op;
  obs.y = op.apply(z0);
  obs.cond_received = prior.means.row(0).transpose();

  RestorationConfig cfg;
  cfg.guidance_scale = 1.0;
  cfg.seed = 55;
  auto res = restore(model, s, obs, cfg);

  const auto& kept = op.kept_flags();
  for (int i = 0; i < d; ++i) {
    if (kept[i]) {
      CHECK(std::abs(res.z0_hat[i] - obs.y[i]) <= 1e-6);
    } else {
      // conditioned component mean plus a few posterior widths
      CHECK(std::abs(res.z0_hat[i] - mu[i]) <= 4.0 * 0.1);
      CHECK(res.z0_hat[i] != 0.0);
    }
  }
}

TEST_CASE("ancestral sampling collapses onto a point mass") {
  auto s = build_linear_schedule(200, 1e-4, 2e-2);
  GaussianMixturePrior p;
  p.means = (Mat(1, 4) << 2.0, -1.0, 0.5, 1.5).finished();
  p.variances = Mat::Zero(1, 4);
  p.weights = Vec::Constant(1, 1.0);
  MixtureOracleDenoiser model(p, &s);
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    RestorationConfig cfg;
    cfg.seed = seed;
    Vec z = ancestral_sample(model, s, Condition::null_condition(), cfg);
    CHECK((z - p.means.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-3);
  }
}

TEST_CASE("conditional sampling selects the requested component") {
  auto s = build_linear_schedule(100, 1e-4, 2e-2);
  Vec mu = (Vec(4) << 1.5, -1.0, 0.8, -0.6).finished();
  auto prior = pair_prior(mu, 0.05);
  MixtureOracleDenoiser model(prior, &s);
  Condition cond = Condition::from(mu);
  int closer = 0;
  const int N = 200;
  for (int i = 0; i < N; ++i) {
    RestorationConfig cfg;
    cfg.guidance_scale = 1.0;
    cfg.seed = 1000 + i;
    Vec z = ancestral_sample(model, s, cond, cfg);
    if ((z - mu).norm() < (z + mu).norm()) ++closer;
  }
  CHECK(closer >= static_cast<int>(0.95 * N));
}

TEST_CASE("unconditional sampling from a symmetric prior is centered") {
  auto s = build_linear_schedule(100, 1e-4, 2e-2);
  Vec mu = (Vec(2) << 1.0, -0.5).finished();
  auto prior = pair_prior(mu, 0.05);
  MixtureOracleDenoiser model(prior, &s);
  Vec sum = Vec::Zero(2);
  const int N = 1000;
  for (int i = 0; i < N; ++i) {
    RestorationConfig cfg;
    cfg.seed = 5000 + i;
    sum += ancestral_sample(model, s, Condition::null_condition(), cfg);
  }
  Vec mean = sum / N;
  // per-coordinate scale is dominated by the two component means
  double se = std::sqrt((mu.squaredNorm() / 2 + 0.05) / N);
  CHECK(mean.cwiseAbs().maxCoeff() <= 3.0 * se);
}

TEST_CASE("paste baseline reproduces identity observations without noise") {
  auto s = build_linear_schedule(100, 1e-4, 2e-2);
  auto prior = pair_prior((Vec(5) << 1, 0, -1, 2, 0.5).finished(), 0.2);
  MixtureOracleDenoiser model(prior, &s);
  Rng rng(2);
  Observation obs;
  obs.op = DegradationOperator::identity(5);
  obs.y = rng.normal_vec(5);
  RestorationConfig cfg;
  cfg.seed = 8;
  auto res = replace_baseline(model, s, obs, cfg);
  CHECK((res.z0_hat - obs.y).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("paste baseline fills masked regions with finite content") {
  auto s = build_linear_schedule(100, 1e-4, 2e-2);
  Vec mu = (Vec(20) << 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1)
               .finished();
  auto prior = pair_prior(mu, 0.05);
  MixtureOracleDenoiser model(prior, &s);
  auto op = DegradationOperator::segment_mask(20, 8, 4);
  Observation obs;
  obs.op = op;
  obs.y = op.apply(mu);
  obs.cond_received = mu;
  RestorationConfig cfg;
  cfg.guidance_scale = 1.0;
  cfg.seed = 99;
  auto res = replace_baseline(model, s, obs, cfg);
  REQUIRE(res.z0_hat.allFinite());
  double masked_energy = 0.0;
  for (int i = 8; i < 12; ++i) {
    masked_energy += res.z0_hat[i] * res.z0_hat[i];
    CHECK(std::abs(res.z0_hat[i]) <= mu.cwiseAbs().maxCoeff() + 4.0 * 0.25);
  }
  CHECK(masked_energy > 0.0);
}

TEST_CASE("restoration is deterministic in the seed") {
  auto s = build_linear_schedule(80, 1e-4, 2e-2);
  auto prior = pair_prior((Vec(6) << 1, -1, 2, 0.5, -0.2, 0.7).finished(), 0.1);
  MixtureOracleDenoiser model(prior, &s);
  Rng rng(4);
  Observation obs;
  obs.op = DegradationOperator::identity(6);
  obs.y = rng.normal_vec(6);
  RestorationConfig cfg;
  cfg.sigma_y = 0.5;
  cfg.seed = 31;
  auto a = restore(model, s, obs, cfg);
  auto b = restore(model, s, obs, cfg);
  CHECK((a.z0_hat.array() == b.z0_hat.array()).all());
  cfg.seed = 32;
  auto c = restore(model, s, obs, cfg);
  CHECK((a.z0_hat - c.z0_hat).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("non-finite model output surfaces as divergence with the step index") {
  auto s = build_linear_schedule(50, 1e-4, 2e-2);
  NanDenoiser model(4);
  Observation obs;
  obs.op = DegradationOperator::identity(4);
  obs.y = Vec::Constant(4, 1.0);
  RestorationConfig cfg;
  cfg.sigma_y = 1.0;  // keeps lambda < 1 early so the NaN z0 estimate survives
  try {
    restore(model, s, obs, cfg);
    FAIL("expected divergence");
  } catch (const SamplerDivergence& e) {
    CHECK(e.step == 50);
  }
}

TEST_CASE("dimension mismatches are rejected up front") {
  auto s = build_linear_schedule(50, 1e-4, 2e-2);
  auto prior = pair_prior((Vec(4) << 1, 2, 3, 4).finished(), 0.1);
  MixtureOracleDenoiser model(prior, &s);
  Observation obs;
  obs.op = DegradationOperator::identity(5);
  obs.y = Vec::Zero(5);
  RestorationConfig cfg;
  CHECK_THROWS_AS(restore(model, s, obs, cfg), ShapeError);
  CHECK_THROWS_AS(
      {
        cfg.sigma_y = -1.0;
        cfg.validate();
      },
      ConfigError);
}

}  // TEST_SUITE
