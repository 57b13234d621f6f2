#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "stemsim/encoder/encoder.h"

namespace stemsim::encoder {

nlohmann::json arch_to_json(const EncoderArch& arch);
// Throws Error(config) naming the offending field.
EncoderArch arch_from_json(const nlohmann::json& j);

struct ModelFile {
  EncoderParams params;
  nlohmann::json meta;  // free-form, e.g. role and trial
};

// First line: compact JSON header {"format", "arch", "tensors", "meta"}.
// Then every tensor as little-endian float64 in declaration order.
void save_model(const std::filesystem::path& path, const EncoderParams& params,
                const nlohmann::json& meta = nlohmann::json::object());
ModelFile load_model(const std::filesystem::path& path);

}  // namespace stemsim::encoder
