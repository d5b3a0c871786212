#pragma once

#include "common.hpp"

#include <vector>

namespace semcom {

struct GaussianStats {
  int n = 0;
  Vec mean;
  Mat cov;
};

// 10 log10(|ref|^2 / |ref - est|^2), capped at +120 dB for a numerically
// zero residual.
double snr_db(const Vec& reference, const Vec& estimate);

// Sample mean and unbiased covariance, projected to PSD by clipping negative
// eigenvalues at zero. Needs n >= 2.
GaussianStats fit_stats(const std::vector<Vec>& features);

// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}), square root via the
// symmetric eigendecomposition of Sa^{1/2} Sb Sa^{1/2}. Clamped to 0 when
// within -1e-8 of zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Fixed-length windows (the latent frames) whose coordinates lie entirely in
// [region_start, region_start + region_len).
std::vector<Vec> region_features(const Vec& signal, int region_start,
                                 int region_len, int window);

}  // namespace semcom
