#include "audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace semcom {

void ToneSpec::validate() const {
  if (!(f0 > 0.0)) throw ConfigError("fundamental must be positive");
  if (harmonics < 1) throw ConfigError("need at least one harmonic");
  if (static_cast<int>(amplitudes.size()) != harmonics)
    throw ConfigError("one amplitude per harmonic required");
  if (!(duration > 0.0) || !(sample_rate > 0.0))
    throw ConfigError("duration and sample rate must be positive");
  if (f0 * harmonics >= sample_rate / 2.0)
    throw ConfigError("highest harmonic would alias");
}

Vec synth(const ToneSpec& spec, Rng& rng) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(std::lround(spec.duration * spec.sample_rate));
  Vec w = Vec::Zero(n);
  for (int h = 0; h < spec.harmonics; ++h) {
    double freq = spec.f0 * (h + 1);
    double phase = 2.0 * M_PI * rng.uniform();
    double amp = spec.amplitudes[h];
    if (amp == 0.0) continue;
    for (Eigen::Index i = 0; i < n; ++i)
      w[i] += amp * std::sin(2.0 * M_PI * freq * i / spec.sample_rate + phase);
  }
  double peak = w.cwiseAbs().maxCoeff();
  if (peak > 0.0) w *= 0.9 / peak;
  return w;
}

FrameCodec::FrameCodec(int frame_len, int retained)
    : frame_len_(frame_len), retained_(retained) {
  if (frame_len < 1 || retained < 1 || retained > frame_len)
    throw ConfigError("require 1 <= retained <= frame_len");
  basis_.resize(frame_len, frame_len);
  double scale0 = std::sqrt(1.0 / frame_len);
  double scale = std::sqrt(2.0 / frame_len);
  for (int k = 0; k < frame_len; ++k)
    for (int n = 0; n < frame_len; ++n)
      basis_(k, n) = (k == 0 ? scale0 : scale) *
                     std::cos(M_PI * (2.0 * n + 1.0) * k / (2.0 * frame_len));
}

FrameCodec FrameCodec::dct(int frame_len, int retained) {
  return FrameCodec(frame_len, retained);
}

int FrameCodec::frames_for(Eigen::Index n_samples) const {
  return static_cast<int>((n_samples + frame_len_ - 1) / frame_len_);
}

Vec FrameCodec::encode(const Vec& waveform) const {
  int frames = frames_for(waveform.size());
  Vec padded = Vec::Zero(static_cast<Eigen::Index>(frames) * frame_len_);
  padded.head(waveform.size()) = waveform;
  Vec latent(static_cast<Eigen::Index>(frames) * retained_);
  for (int f = 0; f < frames; ++f) {
    Vec coeffs = basis_ * padded.segment(f * frame_len_, frame_len_);
    latent.segment(f * retained_, retained_) = coeffs.head(retained_);
  }
  return latent;
}

Vec FrameCodec::decode(const Vec& latent) const {
  if (latent.size() % retained_ != 0)
    throw ShapeError("latent length not a multiple of retained count");
  int frames = static_cast<int>(latent.size() / retained_);
  Vec w(static_cast<Eigen::Index>(frames) * frame_len_);
  for (int f = 0; f < frames; ++f) {
    Vec coeffs = Vec::Zero(frame_len_);
    coeffs.head(retained_) = latent.segment(f * retained_, retained_);
    w.segment(f * frame_len_, frame_len_) = basis_.transpose() * coeffs;
  }
  return w;
}

std::pair<int, int> FrameCodec::latent_range_for_time(double start_s, double len_s,
                                                      double sample_rate) const {
  if (start_s < 0.0 || len_s < 0.0) throw ContractError("negative time range");
  auto first_sample = static_cast<Eigen::Index>(std::lround(start_s * sample_rate));
  auto last_sample = static_cast<Eigen::Index>(std::lround((start_s + len_s) * sample_rate));
  int first_frame = static_cast<int>(first_sample / frame_len_);
  int end_frame = static_cast<int>((last_sample + frame_len_ - 1) / frame_len_);
  return {first_frame * retained_, end_frame * retained_};
}

void write_wav(const std::string& path, const Vec& samples, int sample_rate) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path + " for writing");

  auto put32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto put16 = [&](uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };

  const uint32_t data_bytes = static_cast<uint32_t>(samples.size()) * 4;
  f.write("RIFF", 4);
  put32(36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put32(16);
  put16(3);  // IEEE float
  put16(1);  // mono
  put32(static_cast<uint32_t>(sample_rate));
  put32(static_cast<uint32_t>(sample_rate) * 4);
  put16(4);
  put16(32);
  f.write("data", 4);
  put32(data_bytes);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    float v = static_cast<float>(samples[i]);
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  if (!f) throw ConfigError("short write to " + path);
}

}  // namespace semcom
