#include <doctest.h>

#include "core/audio.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

using namespace semcom;

namespace {

// fundamental frequency via zero-crossing count
double zero_crossing_freq(const Vec& w, double sample_rate) {
  int crossings = 0;
  for (Eigen::Index i = 1; i < w.size(); ++i)
    if ((w[i - 1] < 0.0) != (w[i] < 0.0)) ++crossings;
  double seconds = w.size() / sample_rate;
  return crossings / (2.0 * seconds);
}

}  // namespace

TEST_SUITE("audio") {

TEST_CASE("single tone has the requested length and fundamental") {
  ToneSpec spec;
  spec.f0 = 440.0;
  spec.harmonics = 1;
  spec.amplitudes = {1.0};
  spec.duration = 1.0;
  spec.sample_rate = 16000.0;
  Rng rng(5);
  Vec w = synth(spec, rng);
  CHECK(w.size() == 16000);
  CHECK(std::abs(zero_crossing_freq(w, 16000.0) - 440.0) <= 1.0);
}

TEST_CASE("all-zero amplitudes give a zero waveform") {
  ToneSpec spec;
  spec.f0 = 100.0;
  spec.harmonics = 2;
  spec.amplitudes = {0.0, 0.0};
  Rng rng(1);
  Vec w = synth(spec, rng);
  CHECK(w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("waveforms are peak-normalized") {
  ToneSpec spec;
  spec.f0 = 220.0;
  spec.harmonics = 3;
  spec.amplitudes = {1.0, 0.5, 0.25};
  Rng rng(9);
  Vec w = synth(spec, rng);
  CHECK(std::abs(w.cwiseAbs().maxCoeff() - 0.9) <= 1e-9);
}

TEST_CASE("aliasing harmonics are rejected") {
  ToneSpec spec;
  spec.f0 = 5000.0;
  spec.harmonics = 2;
  spec.amplitudes = {1.0, 1.0};
  Rng rng(1);
  CHECK_THROWS_AS(synth(spec, rng), ConfigError);
}

TEST_CASE("full-rank codec round-trips exactly") {
  auto codec = FrameCodec::dct(32, 32);
  Rng rng(2);
  Vec w = rng.normal_vec(128);
  Vec back = codec.decode(codec.encode(w));
  CHECK((back - w).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("constant frames live entirely in the first coefficient") {
  auto codec = FrameCodec::dct(16, 1);
  Vec w = Vec::Constant(64, 0.7);
  Vec latent = codec.encode(w);
  CHECK(latent.size() == 4);
  Vec back = codec.decode(latent);
  CHECK((back - w).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("band-limited tones survive heavy truncation") {
  // a low tone concentrates in the retained low-order bins
  ToneSpec spec;
  spec.f0 = 220.0;
  spec.harmonics = 1;
  spec.amplitudes = {1.0};
  spec.duration = 0.5;
  Rng rng(3);
  Vec w = synth(spec, rng);
  auto codec = FrameCodec::dct(64, 16);
  Vec back = codec.decode(codec.encode(w));
  double snr = 10.0 * std::log10(w.squaredNorm() / (w - back.head(w.size())).squaredNorm());
  CHECK(snr >= 40.0);
}

TEST_CASE("latent ranges map time windows onto whole frames") {
  auto codec = FrameCodec::dct(64, 16);
  auto [lo, hi] = codec.latent_range_for_time(0.0, 1.0, 16000.0);
  CHECK(lo == 0);
  CHECK(hi == 16000 / 64 * 16);
  auto [lo2, hi2] = codec.latent_range_for_time(0.5, 0.1, 16000.0);
  CHECK(lo2 == 8000 / 64 * 16);
  CHECK(hi2 == (9600 + 63) / 64 * 16);
}

TEST_CASE("encode zero-pads partial frames") {
  auto codec = FrameCodec::dct(8, 8);
  Vec w = Vec::Constant(12, 1.0);
  Vec latent = codec.encode(w);
  CHECK(latent.size() == 16);
  Vec back = codec.decode(latent);
  CHECK((back.head(12) - w).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(back.tail(4).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("wav files carry a float-format RIFF header") {
  Rng rng(7);
  Vec w = 0.5 * rng.normal_vec(256);
  std::string path = "test_tone.wav";
  write_wav(path, w, 16000);
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  char hdr[44];
  f.read(hdr, sizeof(hdr));
  REQUIRE(f.good());
  CHECK(std::string(hdr, 4) == "RIFF");
  CHECK(std::string(hdr + 8, 4) == "WAVE");
  uint16_t fmt;
  std::memcpy(&fmt, hdr + 20, 2);
  CHECK(fmt == 3);  // IEEE float
  uint32_t data_bytes;
  std::memcpy(&data_bytes, hdr + 40, 4);
  CHECK(data_bytes == 256 * 4);
  float first;
  f.read(reinterpret_cast<char*>(&first), 4);
  CHECK(first == doctest::Approx(static_cast<float>(w[0])));
  f.close();
  std::remove(path.c_str());
}

TEST_CASE("invalid codec shapes are rejected") {
  CHECK_THROWS_AS(FrameCodec::dct(8, 0), ConfigError);
  CHECK_THROWS_AS(FrameCodec::dct(8, 9), ConfigError);
  auto codec = FrameCodec::dct(8, 4);
  CHECK_THROWS_AS(codec.decode(Vec::Zero(6)), ShapeError);
}

}  // TEST_SUITE
