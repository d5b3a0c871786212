#include <doctest.h>

#include "core/schedule.hpp"

using namespace semcom;

TEST_SUITE("schedule") {

TEST_CASE("linear schedule endpoints and cumulative product") {
  auto s = build_linear_schedule(1000, 1e-4, 2e-2);
  CHECK(s.beta(1) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.beta(1000) == doctest::Approx(2e-2).epsilon(1e-12));

  // independent extended-precision product
  long double prod = 1.0L;
  for (int t = 1; t <= 1000; ++t) {
    long double b = 1e-4L + (2e-2L - 1e-4L) * (t - 1) / 999.0L;
    prod *= 1.0L - b;
  }
  CHECK(std::abs(s.alpha_bar(1000) - static_cast<double>(prod)) <=
        1e-12 * static_cast<double>(prod));
  CHECK(s.alpha_bar(1000) < 1e-4);  // deep-noise tail
}

TEST_CASE("two-step product by hand") {
  auto s = build_linear_schedule(2, 0.1, 0.2);
  CHECK(s.alpha_bar(2) == doctest::Approx(0.9 * 0.8).epsilon(1e-15));
}

TEST_CASE("non-increasing beta range is rejected") {
  CHECK_THROWS_AS(build_linear_schedule(2, 0.2, 0.1), ConfigError);
  CHECK_THROWS_AS(build_linear_schedule(1, 0.1, 0.2), ConfigError);
  CHECK_THROWS_AS(build_linear_schedule(10, 0.0, 0.2), ConfigError);
  CHECK_THROWS_AS(build_linear_schedule(10, 0.1, 1.0), ConfigError);
}

TEST_CASE("forward marginal with zero noise") {
  auto s = build_linear_schedule(50, 1e-3, 1e-2);
  Rng rng(1);
  Vec z0 = rng.normal_vec(6);
  Vec eps = Vec::Zero(6);
  for (int t : {1, 25, 50}) {
    Vec zt = forward_marginal(s, z0, t, eps);
    CHECK((zt - s.sqrt_alpha_bar(t) * z0).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("forward marginal sample statistics") {
  auto s = build_linear_schedule(100, 1e-3, 2e-2);
  const int t = 60, N = 100000;
  Vec z0 = (Vec(1) << 1.3).finished();
  Rng rng(42);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < N; ++i) {
    double v = forward_marginal(s, z0, t, rng.normal_vec(1))[0];
    sum += v;
    sum2 += v * v;
  }
  double mean = sum / N;
  double var = (sum2 - N * mean * mean) / (N - 1);
  double want_mean = s.sqrt_alpha_bar(t) * z0[0];
  double want_var = 1.0 - s.alpha_bar(t);
  double se_mean = std::sqrt(want_var / N);
  double se_var = want_var * std::sqrt(2.0 / (N - 1));
  CHECK(std::abs(mean - want_mean) <= 3.0 * se_mean);
  CHECK(std::abs(var - want_var) <= 3.0 * se_var);
}

TEST_CASE("posterior coefficients recomputed for a 4-step schedule") {
  auto s = build_linear_schedule(4, 0.1, 0.4);
  Vec v = (Vec(3) << 1.0, -2.0, 0.5).finished();
  for (int t = 2; t <= 4; ++t) {
    double ab = s.alpha_bar(t), abp = s.alpha_bar_prev(t), b = s.beta(t);
    double c1 = std::sqrt(abp) * b / (1.0 - ab);
    double c2 = std::sqrt(1.0 - b) * (1.0 - abp) / (1.0 - ab);
    auto p = posterior_params(s, v, v, t);
    CHECK((p.mean - (c1 + c2) * v).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(p.variance == doctest::Approx((1.0 - abp) / (1.0 - ab) * b).epsilon(1e-14));
  }
}

TEST_CASE("posterior of zero inputs is zero with variance sigma_t^2") {
  auto s = build_linear_schedule(10, 1e-3, 1e-2);
  Vec z = Vec::Zero(4);
  auto p = posterior_params(s, z, z, 5);
  CHECK(p.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.variance == s.sigma2(5));
  CHECK_THROWS_AS(posterior_params(s, z, z, 1), ContractError);
}

TEST_CASE("tiny-beta limit: posterior mean collapses onto z_t") {
  // the z0 coefficient scales like beta_t / (1 - abar_{t-1}); with beta pinned
  // near 1e-9 it takes ~2e6 accumulated steps to push it below 1e-6
  const int T = 2000000;
  auto s = build_linear_schedule(T, 1e-9, 1.5e-9);
  Rng rng(5);
  Vec zt = rng.normal_vec(8);
  Vec dir = rng.normal_vec(8);
  Vec z0 = zt + 0.5 * zt.norm() / dir.norm() * dir;
  auto p = posterior_params(s, zt, z0, T);
  CHECK((p.mean - zt).norm() <= 1e-6 * zt.norm());
}

TEST_CASE("noise-estimate inversion round-trips the forward marginal") {
  auto s = build_linear_schedule(80, 1e-4, 2e-2);
  Rng rng(9);
  Vec z0 = rng.normal_vec(12);
  for (int t : {1, 40, 80}) {
    Vec eps = rng.normal_vec(12);
    Vec zt = forward_marginal(s, z0, t, eps);
    CHECK((estimate_z0(s, zt, eps, t) - z0).cwiseAbs().maxCoeff() <= 1e-10);
  }
  Vec zt = rng.normal_vec(12);
  CHECK((estimate_z0(s, zt, Vec::Zero(12), 30) - zt / s.sqrt_alpha_bar(30))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
}

TEST_CASE("step index bounds") {
  auto s = build_linear_schedule(10, 1e-3, 1e-2);
  CHECK_THROWS_AS(s.beta(0), ContractError);
  CHECK_THROWS_AS(s.beta(11), ContractError);
}

}  // TEST_SUITE
