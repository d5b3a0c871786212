#pragma once

#include "common.hpp"

#include <utility>
#include <vector>

namespace semcom {

// Linear degradation A with pseudo-inverse and range/null projections.
// Mask operators keep the latent dimension: dropped coordinates are zeroed,
// so dim_out == dim_in and the kept-index set travels with the operator.
class DegradationOperator {
 public:
  enum class Kind { Identity, Mask, Dense };

  // empty (0-dimensional) identity; placeholder until assigned
  DegradationOperator() = default;

  static DegradationOperator identity(int dim);
  static DegradationOperator mask(int dim, std::vector<int> kept);
  // Contiguous-erasure convenience: drop indices [drop_start, drop_start+drop_len).
  static DegradationOperator segment_mask(int dim, int drop_start, int drop_len);
  static DegradationOperator segment_mask_fractions(int dim, double start_fraction,
                                                    double length_fraction);
  static DegradationOperator dense(const Mat& a);

  Kind kind() const { return kind_; }
  int dim_in() const { return dim_in_; }
  int dim_out() const { return dim_out_; }

  Vec apply(const Vec& z) const;       // A z
  Vec pinv_apply(const Vec& y) const;  // A+ y
  Vec range_project(const Vec& z) const;  // A+ A z

  // (A+ A z, (I - A+ A) z); the parts sum to z
  std::pair<Vec, Vec> decompose(const Vec& z) const;

  // A+ y + (I - A+ A) z_tilde; consistent with y whenever y is in range(A)
  Vec combine_solution(const Vec& y, const Vec& z_tilde) const;

  // 1 for kept coordinates, 0 for dropped (Identity: all ones). Only
  // meaningful for Identity/Mask.
  const std::vector<uint8_t>& kept_flags() const;

  const Mat& matrix() const { return a_; }
  const Mat& pinv_matrix() const { return pinv_; }

 private:
  void check_in(const Vec& z) const;
  void check_out(const Vec& y) const;

  Kind kind_ = Kind::Identity;
  int dim_in_ = 0;
  int dim_out_ = 0;
  std::vector<uint8_t> kept_;
  Mat a_, pinv_;
};

}  // namespace semcom
