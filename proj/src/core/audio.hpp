#pragma once

#include "common.hpp"

#include <string>
#include <utility>

namespace semcom {

struct ToneSpec {
  double f0 = 440.0;          // Hz
  int harmonics = 1;
  std::vector<double> amplitudes;  // one per harmonic
  double duration = 1.0;      // seconds
  double sample_rate = 16000.0;

  void validate() const;
};

// Sum of harmonic sinusoids with random phases, peak-normalized to 0.9.
Vec synth(const ToneSpec& spec, Rng& rng);

// Orthonormal DCT-II frame codec: analysis keeps the `retained` lowest
// coefficients per frame. Stands in for a learned compressor so the inverse
// problem stays linear end to end.
class FrameCodec {
 public:
  static FrameCodec dct(int frame_len, int retained);

  int frame_len() const { return frame_len_; }
  int retained() const { return retained_; }

  int frames_for(Eigen::Index n_samples) const;

  // latent is the concatenation of per-frame retained coefficients; inputs
  // whose length is not a multiple of the frame length are zero-padded
  Vec encode(const Vec& waveform) const;
  Vec decode(const Vec& latent) const;

  // Latent-coordinate range [begin, end) covering waveform time
  // [start_s, start_s + len_s) at the given sample rate.
  std::pair<int, int> latent_range_for_time(double start_s, double len_s,
                                            double sample_rate) const;

  const Mat& basis() const { return basis_; }

 private:
  FrameCodec(int frame_len, int retained);
  int frame_len_, retained_;
  Mat basis_;  // frame_len x frame_len, rows orthonormal
};

// 32-bit float mono WAV.
void write_wav(const std::string& path, const Vec& samples, int sample_rate);

}  // namespace semcom
