#pragma once

#include "common.hpp"
#include "linop.hpp"

#include <optional>

namespace semcom {

enum class NoiseKnowledge { KnownSigma, BlindAdaptive, Manual };

struct ErasureSpec {
  double start_fraction = 0.0;
  double length_fraction = 0.0;
};

struct ChannelSpec {
  double psnr_db = 30.0;  // +inf disables latent noise
  std::optional<ErasureSpec> erasure;
  NoiseKnowledge knowledge = NoiseKnowledge::KnownSigma;
  double manual_sigma = 0.0;
  // Conditioning travels over the same channel; by default it sees the same
  // PSNR as the latent, but the two can be split (inpainting noises only the
  // semantics).
  std::optional<double> cond_psnr_db;
};

struct Observation {
  Vec y;
  DegradationOperator op;
  // true per-coordinate noise stds; populated only in KnownSigma mode
  std::optional<double> sigma_y_true;
  std::optional<double> cond_sigma_true;
  Vec cond_received;
  // receiver-side working estimate of the conditioning noise level, filled in
  // by the harness once it has decided how much it trusts the channel
  double cond_noise_std_hint = 0.0;
};

// sigma_c = sqrt(P / 10^(psnr/10))
double sigma_from_psnr(double psnr_db, double power);

// Erasure first (lost coordinates carry nothing), then AWGN on the kept
// coordinates; the conditioning embedding gets independent AWGN at its PSNR.
Observation transmit(const Vec& z, const Vec& cond, const ChannelSpec& spec, Rng& rng);

// Blind noise-std estimate: median absolute deviation of first differences,
// MAD(dy) / (sqrt(2) * 0.6745). The masked variant skips differences that
// touch a dropped coordinate.
double estimate_noise_std(const Vec& y);
double estimate_noise_std(const Vec& y, const std::vector<uint8_t>& kept);

// Adaptive working noise level: (max(y) - min(y)) * sigma_y.
double adaptive_sigma_y(const Vec& y, double sigma_y);

}  // namespace semcom
