#include "linop.hpp"

#include <algorithm>
#include <cmath>

namespace semcom {

DegradationOperator DegradationOperator::identity(int dim) {
  if (dim < 1) throw ConfigError("operator dimension must be positive");
  DegradationOperator op;
  op.kind_ = Kind::Identity;
  op.dim_in_ = op.dim_out_ = dim;
  op.kept_.assign(dim, 1);
  return op;
}

DegradationOperator DegradationOperator::mask(int dim, std::vector<int> kept) {
  if (dim < 1) throw ConfigError("operator dimension must be positive");
  DegradationOperator op;
  op.kind_ = Kind::Mask;
  op.dim_in_ = op.dim_out_ = dim;
  op.kept_.assign(dim, 0);
  for (int i : kept) {
    if (i < 0 || i >= dim) throw ConfigError("kept index out of range");
    op.kept_[i] = 1;
  }
  return op;
}

DegradationOperator DegradationOperator::segment_mask(int dim, int drop_start,
                                                      int drop_len) {
  if (drop_start < 0 || drop_len < 0 || drop_start + drop_len > dim)
    throw ConfigError("erasure segment outside latent bounds");
  std::vector<int> kept;
  kept.reserve(dim - drop_len);
  for (int i = 0; i < dim; ++i)
    if (i < drop_start || i >= drop_start + drop_len) kept.push_back(i);
  return mask(dim, std::move(kept));
}

DegradationOperator DegradationOperator::segment_mask_fractions(
    int dim, double start_fraction, double length_fraction) {
  if (start_fraction < 0.0 || length_fraction < 0.0 ||
      start_fraction + length_fraction > 1.0 + 1e-12)
    throw ConfigError("erasure fractions must lie in [0,1] with start+length <= 1");
  int start = static_cast<int>(std::lround(start_fraction * dim));
  int len = static_cast<int>(std::lround(length_fraction * dim));
  len = std::min(len, dim - start);
  return segment_mask(dim, start, len);
}

DegradationOperator DegradationOperator::dense(const Mat& a) {
  if (a.rows() < 1 || a.cols() < 1) throw ConfigError("empty dense operator");
  DegradationOperator op;
  op.kind_ = Kind::Dense;
  op.dim_in_ = static_cast<int>(a.cols());
  op.dim_out_ = static_cast<int>(a.rows());
  op.a_ = a;

  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cutoff = 1e-12 * sv(0);
  Vec inv_sv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    inv_sv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  op.pinv_ = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();

  // Moore-Penrose identities, checked once at construction.
  double scale = 1.0 + a.cwiseAbs().maxCoeff();
  if ((a * op.pinv_ * a - a).cwiseAbs().maxCoeff() > 1e-10 * scale ||
      (op.pinv_ * a * op.pinv_ - op.pinv_).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvariantViolation("pseudo-inverse fails Moore-Penrose identities");
  return op;
}

void DegradationOperator::check_in(const Vec& z) const {
  if (z.size() != dim_in_)
    throw ShapeError("operator input dimension mismatch: got " +
                     std::to_string(z.size()) + ", want " +
                     std::to_string(dim_in_));
}

void DegradationOperator::check_out(const Vec& y) const {
  if (y.size() != dim_out_)
    throw ShapeError("operator output dimension mismatch: got " +
                     std::to_string(y.size()) + ", want " +
                     std::to_string(dim_out_));
}

Vec DegradationOperator::apply(const Vec& z) const {
  check_in(z);
  switch (kind_) {
    case Kind::Identity:
      return z;
    case Kind::Mask: {
      Vec y = z;
      for (int i = 0; i < dim_in_; ++i)
        if (!kept_[i]) y[i] = 0.0;
      return y;
    }
    case Kind::Dense:
      return a_ * z;
  }
  throw InvariantViolation("unreachable operator kind");
}

Vec DegradationOperator::pinv_apply(const Vec& y) const {
  check_out(y);
  switch (kind_) {
    case Kind::Identity:
      return y;
    case Kind::Mask: {
      // masks are their own pseudo-inverse
      Vec z = y;
      for (int i = 0; i < dim_in_; ++i)
        if (!kept_[i]) z[i] = 0.0;
      return z;
    }
    case Kind::Dense:
      return pinv_ * y;
  }
  throw InvariantViolation("unreachable operator kind");
}

Vec DegradationOperator::range_project(const Vec& z) const {
  check_in(z);
  if (kind_ == Kind::Dense) return pinv_ * (a_ * z);
  return apply(z);
}

std::pair<Vec, Vec> DegradationOperator::decompose(const Vec& z) const {
  Vec range_part = range_project(z);
  Vec null_part = z - range_part;
  return {std::move(range_part), std::move(null_part)};
}

Vec DegradationOperator::combine_solution(const Vec& y, const Vec& z_tilde) const {
  check_out(y);
  check_in(z_tilde);
  return pinv_apply(y) + (z_tilde - range_project(z_tilde));
}

const std::vector<uint8_t>& DegradationOperator::kept_flags() const {
  if (kind_ == Kind::Dense)
    throw ContractError("kept_flags undefined for dense operators");
  return kept_;
}

}  // namespace semcom
