#include "terrain/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace terrain {

namespace {

uint16_t read_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

constexpr uint16_t kFmtPcm = 1;
constexpr uint16_t kFmtFloat = 3;
constexpr uint16_t kFmtExtensible = 0xFFFE;

struct FmtChunk {
  uint16_t format = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t block_align = 0;
  uint16_t bits = 0;
};

}  // namespace

void ClipConfig::validate() const {
  if (!(clip_ms > 0.0)) throw std::invalid_argument("clip_ms must be positive");
  if (overlap_ms < 0.0 || overlap_ms >= clip_ms)
    throw std::invalid_argument("overlap_ms must lie in [0, clip_ms)");
}

Eigen::Index duration_samples(int sample_rate, double ms) {
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
  return static_cast<Eigen::Index>(std::llround(ms * sample_rate / 1000.0));
}

AudioSignal load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavFormatError("cannot open wav file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw WavFormatError("not a RIFF/WAVE file: " + path);

  FmtChunk fmt;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  size_t data_size = 0;

  // Walk chunks; anything unknown is skipped. Chunks are word-aligned.
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* hdr = bytes.data() + pos;
    uint32_t size = read_u32(hdr + 4);
    size_t body = pos + 8;
    if (body + size > bytes.size()) throw WavFormatError("truncated chunk in " + path);

    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw WavFormatError("fmt chunk too small in " + path);
      const uint8_t* f = bytes.data() + body;
      fmt.format = read_u16(f);
      fmt.channels = read_u16(f + 2);
      fmt.sample_rate = read_u32(f + 4);
      fmt.block_align = read_u16(f + 12);
      fmt.bits = read_u16(f + 14);
      if (fmt.format == kFmtExtensible) {
        // Real format code sits in the first two bytes of the extension GUID.
        if (size < 40) throw WavFormatError("extensible fmt chunk too small in " + path);
        fmt.format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt) throw WavFormatError("missing fmt chunk in " + path);
  if (data == nullptr) throw WavFormatError("missing data chunk in " + path);
  if (fmt.channels == 0 || fmt.sample_rate == 0)
    throw WavFormatError("degenerate fmt chunk in " + path);

  const bool pcm16 = fmt.format == kFmtPcm && fmt.bits == 16;
  const bool float32 = fmt.format == kFmtFloat && fmt.bits == 32;
  if (!pcm16 && !float32)
    throw WavUnsupportedError("unsupported wav encoding (format " + std::to_string(fmt.format) +
                              ", " + std::to_string(fmt.bits) + " bit) in " + path);

  const size_t bytes_per_sample = fmt.bits / 8;
  const size_t frame_size =
      fmt.block_align ? fmt.block_align : bytes_per_sample * fmt.channels;
  if (frame_size < bytes_per_sample * fmt.channels)
    throw WavFormatError("block alignment smaller than a frame in " + path);
  const size_t frames = data_size / frame_size;
  if (frames == 0) throw WavFormatError("empty data chunk in " + path);

  AudioSignal out;
  out.sample_rate = static_cast<int>(fmt.sample_rate);
  out.samples.resize(static_cast<Eigen::Index>(frames));

  const double inv_channels = 1.0 / fmt.channels;
  for (size_t i = 0; i < frames; ++i) {
    const uint8_t* frame = data + i * frame_size;
    double acc = 0.0;
    for (unsigned c = 0; c < fmt.channels; ++c) {
      const uint8_t* s = frame + c * bytes_per_sample;
      if (pcm16) {
        int16_t v;
        std::memcpy(&v, s, 2);
        acc += v / 32768.0;
      } else {
        float v;
        std::memcpy(&v, s, 4);
        acc += std::clamp(static_cast<double>(v), -1.0, 1.0);
      }
    }
    out.samples[static_cast<Eigen::Index>(i)] = acc * inv_channels;
  }
  return out;
}

void save_wav(const std::string& path, const AudioSignal& signal) {
  if (signal.sample_rate <= 0) throw std::invalid_argument("save_wav: sample_rate must be positive");
  if (signal.samples.size() == 0) throw std::invalid_argument("save_wav: empty signal");

  const uint32_t n = static_cast<uint32_t>(signal.samples.size());
  const uint32_t data_size = n * 2;
  const uint32_t riff_size = 36 + data_size;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  auto put_u16 = [&](uint16_t v) { out.put(char(v & 0xFF)).put(char(v >> 8)); };
  auto put_u32 = [&](uint32_t v) {
    out.put(char(v & 0xFF)).put(char((v >> 8) & 0xFF)).put(char((v >> 16) & 0xFF)).put(char(v >> 24));
  };

  out.write("RIFF", 4);
  put_u32(riff_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(kFmtPcm);
  put_u16(1);  // mono
  put_u32(static_cast<uint32_t>(signal.sample_rate));
  put_u32(static_cast<uint32_t>(signal.sample_rate) * 2);  // byte rate
  put_u16(2);                                              // block align
  put_u16(16);
  out.write("data", 4);
  put_u32(data_size);

  for (Eigen::Index i = 0; i < signal.samples.size(); ++i) {
    double v = std::clamp(signal.samples[i], -1.0, 1.0);
    auto q = static_cast<int16_t>(std::lround(v * 32767.0));
    put_u16(static_cast<uint16_t>(q));
  }
  if (!out) throw std::runtime_error("short write: " + path);
}

std::vector<AudioSignal> segment_clips(const AudioSignal& signal, const ClipConfig& cfg) {
  cfg.validate();
  if (signal.sample_rate <= 0) throw std::invalid_argument("segment_clips: invalid sample rate");

  const Eigen::Index clip_len = duration_samples(signal.sample_rate, cfg.clip_ms);
  const Eigen::Index hop = duration_samples(signal.sample_rate, cfg.clip_ms - cfg.overlap_ms);
  if (clip_len <= 0 || hop <= 0) throw std::invalid_argument("segment_clips: degenerate clip geometry");
  if (signal.samples.size() < clip_len)
    throw std::invalid_argument("segment_clips: signal shorter than one clip");

  std::vector<AudioSignal> clips;
  for (Eigen::Index start = 0; start + clip_len <= signal.samples.size(); start += hop) {
    AudioSignal clip;
    clip.sample_rate = signal.sample_rate;
    clip.samples = signal.samples.segment(start, clip_len);
    clips.push_back(std::move(clip));
  }
  return clips;
}

}  // namespace terrain
