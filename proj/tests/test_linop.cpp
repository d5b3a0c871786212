#include <doctest.h>

#include "core/linop.hpp"

using namespace semcom;

namespace {

// independent pseudo-inverse via the normal equations (full-row-rank case)
Mat pinv_oracle_full_row_rank(const Mat& a) {
  return a.transpose() * (a * a.transpose()).inverse();
}

}  // namespace

TEST_SUITE("linop") {

TEST_CASE("mask apply keeps selected coordinates") {
  auto op = DegradationOperator::mask(4, {0, 1});
  Vec z = (Vec(4) << 1, 2, 3, 4).finished();
  Vec y = op.apply(z);
  CHECK(y.isApprox((Vec(4) << 1, 2, 0, 0).finished()));
}

TEST_CASE("identity apply is a no-op") {
  auto op = DegradationOperator::identity(3);
  Vec z = (Vec(3) << -1, 0.5, 2).finished();
  CHECK(op.apply(z).isApprox(z));
}

TEST_CASE("dense apply is plain matrix multiplication") {
  Mat a(2, 2);
  a << 1, 1, 0, 0;
  a /= std::sqrt(2.0);
  auto op = DegradationOperator::dense(a);
  Vec z = (Vec(2) << 1, 1).finished();
  Vec y = op.apply(z);
  CHECK(y[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(0.0));
}

TEST_CASE("mask is its own pseudo-inverse") {
  auto op = DegradationOperator::mask(4, {0, 1});
  Vec y = (Vec(4) << 5, 6, 0, 0).finished();
  CHECK(op.pinv_apply(y).isApprox(y));
}

TEST_CASE("identity pseudo-inverse is a no-op") {
  auto op = DegradationOperator::identity(4);
  Vec y = (Vec(4) << 1, -2, 3, -4).finished();
  CHECK(op.pinv_apply(y).isApprox(y));
}

TEST_CASE("dense pseudo-inverse matches the normal-equation oracle") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    Mat a(3, 7);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    auto op = DegradationOperator::dense(a);
    Mat want = pinv_oracle_full_row_rank(a);
    CHECK((op.pinv_matrix() - want).cwiseAbs().maxCoeff() <= 1e-8);
    Vec z = rng.normal_vec(7);
    CHECK((op.pinv_apply(op.apply(z)) - op.range_project(z)).cwiseAbs().maxCoeff() <=
          1e-10);
  }
}

TEST_CASE("mask decomposition splits coordinates") {
  auto op = DegradationOperator::mask(4, {0, 1});
  Vec z = (Vec(4) << 1, 2, 3, 4).finished();
  auto [range_part, null_part] = op.decompose(z);
  CHECK(range_part.isApprox((Vec(4) << 1, 2, 0, 0).finished()));
  CHECK(null_part.isApprox((Vec(4) << 0, 0, 3, 4).finished()));
}

TEST_CASE("identity decomposition has a trivial null part") {
  auto op = DegradationOperator::identity(5);
  Rng rng(3);
  Vec z = rng.normal_vec(5);
  auto [range_part, null_part] = op.decompose(z);
  CHECK(range_part.isApprox(z));
  CHECK(null_part.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense null part is annihilated by the operator") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    Mat a(8, 16);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    auto op = DegradationOperator::dense(a);
    Vec z = rng.normal_vec(16);
    auto [range_part, null_part] = op.decompose(z);
    CHECK((range_part + null_part - z).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(op.apply(null_part).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("combine_solution pastes known coordinates") {
  auto op = DegradationOperator::mask(4, {0, 1});
  Vec y = (Vec(4) << 5, 6, 0, 0).finished();
  Vec zt = (Vec(4) << 9, 9, 9, 9).finished();
  CHECK(op.combine_solution(y, zt).isApprox((Vec(4) << 5, 6, 9, 9).finished()));
}

TEST_CASE("combine_solution under identity ignores the null candidate") {
  auto op = DegradationOperator::identity(6);
  Rng rng(8);
  Vec y = rng.normal_vec(6);
  Vec zt = rng.normal_vec(6);
  CHECK(op.combine_solution(y, zt).isApprox(y));
}

TEST_CASE("combine_solution is consistent for in-range observations") {
  Rng rng(99);
  for (int rep = 0; rep < 100; ++rep) {
    int d = 8 + static_cast<int>(rng.uniform() * 24);
    std::vector<int> kept;
    for (int i = 0; i < d; ++i)
      if (rng.uniform() < 0.7) kept.push_back(i);
    if (kept.empty()) kept.push_back(0);
    auto op = DegradationOperator::mask(d, kept);
    Vec y = op.apply(rng.normal_vec(d));  // in range(A) by construction
    Vec zt = rng.normal_vec(d);
    Vec sol = op.combine_solution(y, zt);
    CHECK((op.apply(sol) - y).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("kept_flags is defined for masks only") {
  auto mask = DegradationOperator::segment_mask(10, 2, 3);
  const auto& kept = mask.kept_flags();
  for (int i = 0; i < 10; ++i) CHECK(kept[i] == (i < 2 || i >= 5 ? 1 : 0));
  Mat a = Mat::Random(2, 4);
  auto dense = DegradationOperator::dense(a);
  CHECK_THROWS_AS(dense.kept_flags(), ContractError);
}

TEST_CASE("invalid construction arguments are rejected") {
  CHECK_THROWS_AS(DegradationOperator::mask(4, {4}), ConfigError);
  CHECK_THROWS_AS(DegradationOperator::segment_mask(4, 2, 3), ConfigError);
  CHECK_THROWS_AS(DegradationOperator::segment_mask_fractions(10, 0.8, 0.4),
                  ConfigError);
  CHECK_THROWS_AS(DegradationOperator::identity(0), ConfigError);
}

TEST_CASE("shape mismatches raise shape errors") {
  auto op = DegradationOperator::mask(4, {0});
  CHECK_THROWS_AS(op.apply(Vec::Zero(5)), ShapeError);
  CHECK_THROWS_AS(op.pinv_apply(Vec::Zero(3)), ShapeError);
}

}  // TEST_SUITE
