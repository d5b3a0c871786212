#include "metrics.hpp"

#include <cmath>

namespace semcom {

double snr_db(const Vec& reference, const Vec& estimate) {
  if (reference.size() != estimate.size())
    throw ShapeError("snr_db: length mismatch");
  double ref_p = reference.squaredNorm();
  if (ref_p == 0.0) throw ContractError("snr_db: zero reference");
  double err_p = (reference - estimate).squaredNorm();
  if (err_p == 0.0) return 120.0;
  double snr = 10.0 * std::log10(ref_p / err_p);
  return std::min(snr, 120.0);
}

GaussianStats fit_stats(const std::vector<Vec>& features) {
  if (features.size() < 2)
    throw ContractError("fit_stats needs at least two feature vectors");
  const auto n = static_cast<Eigen::Index>(features.size());
  const auto d = features[0].size();
  GaussianStats g;
  g.n = static_cast<int>(n);
  g.mean = Vec::Zero(d);
  for (const auto& f : features) {
    if (f.size() != d) throw ShapeError("fit_stats: inconsistent feature dims");
    g.mean += f;
  }
  g.mean /= static_cast<double>(n);

  Mat c = Mat::Zero(d, d);
  for (const auto& f : features) {
    Vec r = f - g.mean;
    c.noalias() += r * r.transpose();
  }
  c /= static_cast<double>(n - 1);

  // clip negative eigenvalues so downstream square roots stay real
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (c + c.transpose()));
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  g.cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  return g;
}

namespace {

Mat psd_sqrt(const Mat& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-8 * scale)
    throw ContractError(std::string(what) + ": matrix is not PSD");
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size())
    throw ShapeError("frechet_distance: dimension mismatch");
  Mat sa_half = psd_sqrt(a.cov, "frechet_distance lhs");
  Mat inner = sa_half * b.cov * sa_half;
  Mat cross = psd_sqrt(inner, "frechet_distance product");
  double fd = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() -
              2.0 * cross.trace();
  if (fd < 0.0) {
    if (fd < -1e-8)
      throw ContractError("frechet_distance: negative beyond tolerance");
    fd = 0.0;
  }
  return fd;
}

std::vector<Vec> region_features(const Vec& signal, int region_start,
                                 int region_len, int window) {
  if (window < 1) throw ContractError("window must be positive");
  if (region_start < 0 || region_len <= 0 ||
      region_start + region_len > signal.size())
    throw ContractError("region empty or outside signal bounds");
  // every frame that overlaps the region contributes, so content adjoining a
  // region edge is part of the region's statistics
  std::vector<Vec> feats;
  int frames = static_cast<int>(signal.size()) / window;
  for (int f = 0; f < frames; ++f) {
    int lo = f * window;
    if (lo < region_start + region_len && lo + window > region_start)
      feats.push_back(signal.segment(lo, window));
  }
  if (feats.empty()) throw ContractError("region contains no frame");
  return feats;
}

}  // namespace semcom
