#include <doctest.h>

#include "core/tiny_denoiser.hpp"

#include <cstdio>

using namespace semcom;

namespace {

struct Batch {
  std::vector<Vec> zt, eps;
  std::vector<int> t;
  std::vector<Condition> cond;
};

Batch random_batch(const NoiseSchedule& s, int n, int d, Rng& rng) {
  Batch b;
  for (int i = 0; i < n; ++i) {
    int t = 1 + static_cast<int>(rng.uniform() * s.steps);
    if (t > s.steps) t = s.steps;
    b.zt.push_back(rng.normal_vec(d));
    b.eps.push_back(rng.normal_vec(d));
    b.t.push_back(t);
    b.cond.push_back(i % 3 == 0 ? Condition::null_condition()
                                : Condition::from(rng.normal_vec(d)));
  }
  return b;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("analytic gradient matches central finite differences") {
  auto s = build_linear_schedule(50, 1e-3, 2e-2);
  Rng rng(13);
  auto model = TinyDenoiser::random_init(5, 5, 12, &s, rng);
  Batch b = random_batch(s, 8, 5, rng);

  Vec grad;
  model.loss_and_grad(b.zt, b.t, b.cond, b.eps, &grad);

  const double h = 1e-5;
  int n = model.param_count();
  int bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    int j = static_cast<int>(rng.uniform() * n);
    if (j >= n) j = n - 1;
    double orig = model.params()[j];
    model.params()[j] = orig + h;
    double lp = model.loss_and_grad(b.zt, b.t, b.cond, b.eps, nullptr);
    model.params()[j] = orig - h;
    double lm = model.loss_and_grad(b.zt, b.t, b.cond, b.eps, nullptr);
    model.params()[j] = orig;
    double fd = (lp - lm) / (2.0 * h);
    double denom = std::max({std::abs(fd), std::abs(grad[j]), 1e-8});
    if (std::abs(fd - grad[j]) / denom > 1e-4) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("training on a point mass recovers the target") {
  auto s = build_linear_schedule(100, 1e-4, 2e-2);
  const int d = 8;
  Rng rng(7);
  Vec mu = rng.normal_vec(d);
  std::vector<Vec> data(8192, mu), protos(8192, mu);

  auto model = TinyDenoiser::random_init(d, d, 64, &s, rng);
  TrainHyper hyper;
  hyper.seed = 3;
  auto report = train_tiny_denoiser(model, data, protos, s, hyper);
  CHECK(report.final_loss < report.initial_loss);

  // recovered latents should land near mu on average
  Rng eval_rng(21);
  double err = 0.0;
  const int N = 64;
  for (int i = 0; i < N; ++i) {
    int t = 1 + static_cast<int>(eval_rng.uniform() * s.steps);
    if (t > s.steps) t = s.steps;
    Vec eps = eval_rng.normal_vec(d);
    Vec zt = forward_marginal(s, mu, t, eps);
    Vec z0 = estimate_z0(s, zt, model.predict_raw(zt, t, Condition::from(mu)), t);
    err += (z0 - mu).norm();
  }
  err /= N;
  CHECK(err <= 0.1 * mu.norm());
}

TEST_CASE("held-out loss improves over training") {
  auto s = build_linear_schedule(100, 1e-4, 2e-2);
  const int d = 8;
  Rng rng(19);
  std::vector<Vec> data, protos;
  Vec mu = rng.normal_vec(d);
  for (int i = 0; i < 256; ++i) {
    Vec proto = (i % 2 == 0) ? mu : Vec(-mu);
    data.push_back(proto + 0.1 * rng.normal_vec(d));
    protos.push_back(proto);
  }
  auto model = TinyDenoiser::random_init(d, d, 32, &s, rng);
  TrainHyper hyper;
  hyper.epochs = 20;
  hyper.seed = 4;
  auto report = train_tiny_denoiser(model, data, protos, s, hyper);
  REQUIRE(report.holdout_losses.size() == 20);
  CHECK(report.holdout_losses.back() < report.holdout_losses.front());
}

TEST_CASE("divergent learning rates are reported") {
  auto s = build_linear_schedule(100, 1e-4, 2e-2);
  Rng rng(23);
  std::vector<Vec> data, protos;
  for (int i = 0; i < 64; ++i) {
    data.push_back(5.0 * rng.normal_vec(6));
    protos.push_back(data.back());
  }
  auto model = TinyDenoiser::random_init(6, 6, 16, &s, rng);
  TrainHyper hyper;
  hyper.learning_rate = 1e4;
  hyper.seed = 1;
  CHECK_THROWS_AS(train_tiny_denoiser(model, data, protos, s, hyper), TrainingError);
}

TEST_CASE("save/load round-trips predictions exactly") {
  auto s = build_linear_schedule(60, 1e-3, 2e-2);
  Rng rng(31);
  auto model = TinyDenoiser::random_init(4, 4, 10, &s, rng);
  std::string path = "tiny_roundtrip.bin";
  model.save(path);
  auto loaded = TinyDenoiser::load(path, &s);
  std::remove(path.c_str());

  CHECK(loaded.param_count() == model.param_count());
  Vec zt = rng.normal_vec(4);
  Condition c = Condition::from(rng.normal_vec(4));
  Vec a = model.predict_raw(zt, 30, c);
  Vec b = loaded.predict_raw(zt, 30, c);
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("corrupt model files are rejected") {
  std::string path = "tiny_bad.bin";
  std::FILE* f = std::fopen(path.c_str(), "wb");
  std::fputs("not a model", f);
  std::fclose(f);
  auto s = build_linear_schedule(10, 1e-3, 1e-2);
  CHECK_THROWS_AS(TinyDenoiser::load(path, &s), ConfigError);
  std::remove(path.c_str());
}

}  // TEST_SUITE
