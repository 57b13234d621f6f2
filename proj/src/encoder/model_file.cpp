#include "stemsim/encoder/model_file.h"

#include <bit>
#include <fstream>
#include <vector>

#include "stemsim/error.h"

namespace stemsim::encoder {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "stemsim-encoder-v1";

template <typename T>
T field(const json& j, const char* name, const std::string& ctx) {
  if (!j.contains(name)) throw Error(ErrorKind::config, ctx + name + ": missing");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::config, ctx + name + ": wrong type");
  }
}

std::pair<int, int> pair_field(const json& j, const char* name, const std::string& ctx) {
  auto v = field<std::vector<int>>(j, name, ctx);
  if (v.size() != 2) throw Error(ErrorKind::config, ctx + name + ": expected [h, w]");
  return {v[0], v[1]};
}

}  // namespace

json arch_to_json(const EncoderArch& arch) {
  json blocks = json::array();
  for (const auto& b : arch.blocks) {
    blocks.push_back({{"out_channels", b.out_channels},
                      {"kernel", {b.kernel_h, b.kernel_w}},
                      {"stride", {b.stride_h, b.stride_w}}});
  }
  return {{"input", {arch.input_height, arch.input_width}},
          {"blocks", blocks},
          {"embedding_dim", arch.embedding_dim}};
}

EncoderArch arch_from_json(const json& j) {
  const std::string ctx = "encoder.";
  if (!j.is_object()) throw Error(ErrorKind::config, "encoder: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "input" && key != "blocks" && key != "embedding_dim") {
      throw Error(ErrorKind::config, ctx + key + ": unknown field");
    }
  }
  EncoderArch a;
  if (j.contains("input")) std::tie(a.input_height, a.input_width) = pair_field(j, "input", ctx);
  if (j.contains("embedding_dim")) a.embedding_dim = field<int>(j, "embedding_dim", ctx);
  if (!j.contains("blocks")) throw Error(ErrorKind::config, ctx + "blocks: missing");
  if (!j.at("blocks").is_array()) throw Error(ErrorKind::config, ctx + "blocks: expected an array");
  const auto& jb = j.at("blocks");
  for (std::size_t i = 0; i < jb.size(); ++i) {
    const std::string bctx = ctx + "blocks[" + std::to_string(i) + "].";
    for (const auto& [key, _] : jb[i].items()) {
      if (key != "out_channels" && key != "kernel" && key != "stride") {
        throw Error(ErrorKind::config, bctx + key + ": unknown field");
      }
    }
    ConvBlockSpec b;
    b.out_channels = field<int>(jb[i], "out_channels", bctx);
    std::tie(b.kernel_h, b.kernel_w) = pair_field(jb[i], "kernel", bctx);
    std::tie(b.stride_h, b.stride_w) = pair_field(jb[i], "stride", bctx);
    a.blocks.push_back(b);
  }
  try {
    a.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  return a;
}

void save_model(const std::filesystem::path& path, const EncoderParams& params, const json& meta) {
  json tensors = json::array();
  for (const auto& t : params.tensors()) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  json header = {{"format", kFormat}, {"arch", arch_to_json(params.arch())},
                 {"tensors", tensors}, {"meta", meta}};

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write model '" + path.string() + "'");
  os << header.dump() << '\n';
  std::vector<unsigned char> buf(8 * params.size());
  std::size_t i = 0;
  for (double v : params.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) buf[i++] = static_cast<unsigned char>(bits >> (8 * k));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open model '" + path.string() + "'");
  std::string line;
  std::getline(is, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": bad header: " + e.what());
  }
  if (header.value("format", "") != kFormat) {
    throw Error(ErrorKind::format, path.string() + ": not a stemsim encoder file");
  }
  ModelFile m{EncoderParams(arch_from_json(header.at("arch"))), header.value("meta", json::object())};
  std::vector<unsigned char> buf(8 * m.params.size());
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) {
    throw Error(ErrorKind::format, path.string() + ": truncated parameter data");
  }
  auto data = m.params.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(buf[8 * i + k]) << (8 * k);
    data[i] = std::bit_cast<double>(bits);
  }
  return m;
}

}  // namespace stemsim::encoder
