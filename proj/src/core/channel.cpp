#include "channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace semcom {

double sigma_from_psnr(double psnr_db, double power) {
  if (!(power > 0.0)) throw ConfigError("signal power must be positive");
  if (std::isinf(psnr_db) && psnr_db > 0) return 0.0;
  return std::sqrt(power / std::pow(10.0, psnr_db / 10.0));
}

Observation transmit(const Vec& z, const Vec& cond, const ChannelSpec& spec, Rng& rng) {
  if (z.size() == 0 || z.squaredNorm() == 0.0)
    throw ConfigError("cannot transmit a zero latent (power undefined)");

  const int d = static_cast<int>(z.size());
  double power = z.squaredNorm() / d;
  double sigma_c = sigma_from_psnr(spec.psnr_db, power);

  Observation obs;
  obs.op = spec.erasure
               ? DegradationOperator::segment_mask_fractions(
                     d, spec.erasure->start_fraction, spec.erasure->length_fraction)
               : DegradationOperator::identity(d);
  obs.y = obs.op.apply(z);
  const auto& kept = obs.op.kept_flags();
  if (sigma_c > 0.0) {
    for (int i = 0; i < d; ++i)
      if (kept[i]) obs.y[i] += sigma_c * rng.normal();
  }

  double cond_sigma = 0.0;
  obs.cond_received = cond;
  if (cond.size() > 0) {
    double cond_power = cond.squaredNorm() / cond.size();
    double cond_psnr = spec.cond_psnr_db.value_or(spec.psnr_db);
    if (cond_power > 0.0) {
      cond_sigma = sigma_from_psnr(cond_psnr, cond_power);
      if (cond_sigma > 0.0)
        obs.cond_received += cond_sigma * rng.normal_vec(cond.size());
    }
  }

  if (spec.knowledge == NoiseKnowledge::KnownSigma) {
    obs.sigma_y_true = sigma_c;
    obs.cond_sigma_true = cond_sigma;
  }
  return obs;
}

double estimate_noise_std(const Vec& y) {
  return estimate_noise_std(y, std::vector<uint8_t>(y.size(), 1));
}

double estimate_noise_std(const Vec& y, const std::vector<uint8_t>& kept) {
  if (static_cast<size_t>(y.size()) != kept.size())
    throw ShapeError("estimate_noise_std: kept-flag length mismatch");
  std::vector<double> diffs;
  diffs.reserve(y.size());
  for (Eigen::Index i = 1; i < y.size(); ++i)
    if (kept[i] && kept[i - 1]) diffs.push_back(std::abs(y[i] - y[i - 1]));
  if (y.size() < 16 || diffs.size() < 8)
    throw EstimationError("too few coordinates for blind noise estimation");

  size_t mid = diffs.size() / 2;
  std::nth_element(diffs.begin(), diffs.begin() + mid, diffs.end());
  double mad = diffs[mid];
  if (diffs.size() % 2 == 0) {
    double lo = *std::max_element(diffs.begin(), diffs.begin() + mid);
    mad = 0.5 * (lo + mad);
  }
  return mad / (std::sqrt(2.0) * 0.6745);
}

double adaptive_sigma_y(const Vec& y, double sigma_y) {
  if (y.size() == 0) throw ContractError("adaptive_sigma_y on empty vector");
  if (sigma_y < 0.0) throw ContractError("sigma_y must be nonnegative");
  return (y.maxCoeff() - y.minCoeff()) * sigma_y;
}

}  // namespace semcom
