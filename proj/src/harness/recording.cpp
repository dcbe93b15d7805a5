#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fdlink/harness.hpp"

namespace fdlink {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open recording " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}
void put16(std::ofstream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void check_rate(double file_rate, const LinkConfig& link) {
  if (std::abs(file_rate - link.sample_rate_hz) > 1e-6 * link.sample_rate_hz) {
    throw IoError("recording sample rate " + std::to_string(file_rate) + " Hz does not match the link rate " +
                  std::to_string(link.sample_rate_hz) + " Hz (resampling is not supported)");
  }
}

RealPassband parse_wav24(const std::vector<unsigned char>& f, const LinkConfig& link) {
  if (f.size() < 12 || std::memcmp(f.data(), "RIFF", 4) != 0 || std::memcmp(f.data() + 8, "WAVE", 4) != 0) {
    throw IoError("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, block = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= f.size()) {
    const std::uint32_t size = le32(f.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(f.data() + pos, "fmt ", 4) == 0) {
      if (size < 16 || body + size > f.size()) throw IoError("truncated WAV format chunk");
      const std::uint16_t tag = le16(f.data() + body);
      channels = le16(f.data() + body + 2);
      rate = le32(f.data() + body + 4);
      block = le16(f.data() + body + 12);
      bits = le16(f.data() + body + 14);
      if (tag != 1 && tag != 0xFFFE) throw IoError("only PCM WAV files are supported");
      if (bits != 24) throw IoError("only 24-bit WAV files are supported");
      if (channels == 0 || block != 3 * channels) throw IoError("inconsistent WAV block alignment");
      have_fmt = true;
    } else if (std::memcmp(f.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw IoError("WAV data chunk before format chunk");
      if (body + size > f.size() || size % block != 0) throw IoError("truncated WAV data chunk");
      check_rate(rate, link);
      RealPassband out;
      out.rate_hz = rate;
      const std::size_t frames = size / block;
      out.samples.resize(frames);
      for (std::size_t k = 0; k < frames; ++k) {
        const unsigned char* p = f.data() + body + k * block;
        std::int32_t v = static_cast<std::int32_t>(p[0] | p[1] << 8 | p[2] << 16);
        if (v & 0x800000) v -= 0x1000000;
        out.samples[k] = static_cast<double>(v) / 8388608.0;
      }
      return out;
    }
    pos = body + size + (size & 1);
  }
  throw IoError("WAV file has no data chunk");
}

RealPassband parse_raw_float(const std::vector<unsigned char>& f, const LinkConfig& link) {
  if (f.size() % 4 != 0) throw IoError("raw float recording is truncated");
  RealPassband out;
  out.rate_hz = link.sample_rate_hz;
  out.samples.resize(f.size() / 4);
  for (std::size_t k = 0; k < out.samples.size(); ++k) {
    const std::uint32_t bits = le32(f.data() + 4 * k);
    float v;
    std::memcpy(&v, &bits, 4);
    if (!std::isfinite(v)) throw IoError("raw float recording contains non-finite samples");
    out.samples[k] = std::clamp(static_cast<double>(v), -1.0, 1.0);
  }
  return out;
}

}  // namespace

RecordingFormat parse_recording_format(const std::string& s) {
  if (s == "wav24" || s == "wav") return RecordingFormat::wav24;
  if (s == "raw-float" || s == "raw_float" || s == "f32") return RecordingFormat::raw_float;
  throw ConfigError("unsupported recording format '" + s + "' (expected wav24 or raw-float)");
}

RealPassband ingest_recording(const std::filesystem::path& path, RecordingFormat format, const LinkConfig& link) {
  const auto bytes = read_file(path);
  return format == RecordingFormat::wav24 ? parse_wav24(bytes, link) : parse_raw_float(bytes, link);
}

void write_wav24(const std::filesystem::path& path, const RealPassband& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto rate = static_cast<std::uint32_t>(std::llround(x.rate_hz));
  const auto data = static_cast<std::uint32_t>(3 * x.samples.size());
  out.write("RIFF", 4);
  put32(out, 36 + data);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * 3);
  put16(out, 3);
  put16(out, 24);
  out.write("data", 4);
  put32(out, data);
  for (double s : x.samples) {
    const auto v = static_cast<std::int32_t>(std::clamp<long long>(std::llround(s * 8388608.0), -8388608, 8388607));
    const char b[3] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16)};
    out.write(b, 3);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_raw_float(const std::filesystem::path& path, const RealPassband& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (double s : x.samples) {
    const float v = static_cast<float>(s);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put32(out, bits);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

double estimate_noise_power(const RealPassband& x, double silence_seconds) {
  const auto n = static_cast<std::size_t>(std::floor(silence_seconds * x.rate_hz));
  if (n == 0 || n > x.samples.size()) throw ParameterError("silence segment outside the recording");
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += x.samples[k] * x.samples[k];
  return acc / static_cast<double>(n);
}

}  // namespace fdlink
