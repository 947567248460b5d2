#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpglab/types.hpp"

namespace rpglab {

/// Serializable training snapshot. Parameters travel as base64 of the raw
/// little-endian float64 buffer so the JSON stays exact and compact.
struct Checkpoint {
    int schema_version = 1;
    std::string env_id;
    std::string algo;
    std::uint64_t seed = 0;
    int iteration = 0;
    double lambda = 0.0;
    std::vector<int> layer_sizes;
    Vector params;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Doubles to explicit little-endian bytes and back, independent of host
/// byte order.
std::vector<std::uint8_t> doubles_to_le_bytes(const Vector& values);
Vector doubles_from_le_bytes(const std::vector<std::uint8_t>& bytes);

} // namespace rpglab
