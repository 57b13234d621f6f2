#include "stemsim/corpus/wav.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stemsim/error.h"

namespace stemsim::corpus {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

std::vector<std::uint8_t> header(std::uint16_t format, std::uint16_t bits, int sample_rate,
                                 std::size_t n_samples) {
  const std::uint32_t block_align = bits / 8;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(n_samples * block_align);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * block_align);
  put_u16(out, static_cast<std::uint16_t>(block_align));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  return out;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace

WavData parse_wav(std::span<const std::uint8_t> b, const std::string& origin) {
  auto bad = [&](const std::string& what) {
    return Error(ErrorKind::format, origin + ": " + what);
  };
  if (b.size() < 12 || !tag_is(b, 0, "RIFF") || !tag_is(b, 8, "WAVE")) {
    throw bad("not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = read_u32(b, pos + 4);
    const std::size_t body = pos + 8;
    // Some writers leave a streaming placeholder size on the data chunk.
    const std::size_t avail = std::min<std::size_t>(size, b.size() - body);
    if (tag_is(b, pos, "fmt ")) {
      if (avail < 16) throw bad("truncated fmt chunk");
      format = read_u16(b, body);
      channels = read_u16(b, body + 2);
      rate = read_u32(b, body + 4);
      bits = read_u16(b, body + 14);
      if (format == kFormatExtensible) {
        if (avail < 26) throw bad("truncated extensible fmt chunk");
        format = read_u16(b, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(b, pos, "data")) {
      data = b.subspan(body, avail);
      have_data = true;
    }
    pos = body + avail + (avail & 1);
  }

  if (!have_fmt) throw bad("missing fmt chunk");
  if (!have_data) throw bad("missing data chunk");
  if (channels == 0) throw bad("zero channels");
  if (rate == 0) throw bad("zero sample rate");

  WavData wav;
  wav.sample_rate = static_cast<int>(rate);
  wav.channels = channels;
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data.size() / 2;
    wav.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto v = static_cast<std::int16_t>(read_u16(data, 2 * i));
      wav.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data.size() / 4;
    wav.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      wav.samples[i] = std::bit_cast<float>(read_u32(data, 4 * i));
    }
  } else {
    throw bad("unsupported encoding (format " + std::to_string(format) + ", " +
              std::to_string(bits) + " bits)");
  }
  wav.samples.resize(wav.frames() * wav.channels);
  return wav;
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return parse_wav(bytes, path.string());
}

std::vector<float> downmix(const WavData& wav) {
  const std::size_t frames = wav.frames();
  std::vector<float> out(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < wav.channels; ++c) acc += wav.samples[f * wav.channels + c];
    double v = acc / wav.channels;
    if (!std::isfinite(v)) v = 0.0;
    out[f] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return out;
}

std::vector<std::uint8_t> encode_wav16(std::span<const float> samples, int sample_rate) {
  auto out = header(kFormatPcm, 16, sample_rate, samples.size());
  for (float s : samples) {
    double v = std::isfinite(s) ? std::clamp(static_cast<double>(s), -1.0, 1.0) : 0.0;
    auto q = static_cast<std::int16_t>(std::lround(v * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

void write_wav16(const std::filesystem::path& path, std::span<const float> samples,
                 int sample_rate) {
  write_bytes(path, encode_wav16(samples, sample_rate));
}

void write_wav_float(const std::filesystem::path& path, std::span<const float> samples,
                     int sample_rate) {
  auto out = header(kFormatFloat, 32, sample_rate, samples.size());
  for (float s : samples) put_u32(out, std::bit_cast<std::uint32_t>(s));
  write_bytes(path, out);
}

}  // namespace stemsim::corpus
