#include "rpglab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rpglab {

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
} // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(data[i]) << 16;
        if (i + 1 < len) chunk |= static_cast<std::uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) chunk |= static_cast<std::uint32_t>(data[i + 2]);
        out.push_back(kAlphabet[(chunk >> 18) & 63]);
        out.push_back(kAlphabet[(chunk >> 12) & 63]);
        out.push_back(i + 1 < len ? kAlphabet[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kAlphabet[chunk & 63] : '=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    require(text.size() % 4 == 0, "base64: length must be a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = text[i + j];
            if (c == '=') {
                require(j >= 2 && i + 4 == text.size(), "base64: misplaced padding");
                vals[j] = 0;
                ++pad;
            } else {
                require(pad == 0, "base64: data after padding");
                vals[j] = decode_char(c);
                require(vals[j] >= 0, "base64: invalid character");
            }
        }
        const std::uint32_t chunk = (static_cast<std::uint32_t>(vals[0]) << 18) |
                                    (static_cast<std::uint32_t>(vals[1]) << 12) |
                                    (static_cast<std::uint32_t>(vals[2]) << 6) |
                                    static_cast<std::uint32_t>(vals[3]);
        out.push_back(static_cast<std::uint8_t>((chunk >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((chunk >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(chunk & 0xff));
    }
    return out;
}

std::vector<std::uint8_t> doubles_to_le_bytes(const Vector& values) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(values.size()) * 8);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const auto word = std::bit_cast<std::uint64_t>(values(i));
        for (int b = 0; b < 8; ++b)
            bytes[static_cast<std::size_t>(i) * 8 + b] =
                static_cast<std::uint8_t>((word >> (8 * b)) & 0xff);
    }
    return bytes;
}

Vector doubles_from_le_bytes(const std::vector<std::uint8_t>& bytes) {
    require(bytes.size() % 8 == 0, "parameter buffer must hold whole float64 values");
    Vector values(static_cast<Eigen::Index>(bytes.size() / 8));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        std::uint64_t word = 0;
        for (int b = 0; b < 8; ++b)
            word |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i) * 8 + b])
                    << (8 * b);
        values(i) = std::bit_cast<double>(word);
    }
    return values;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
    nlohmann::json j;
    j["schema_version"] = ckpt.schema_version;
    j["env"] = ckpt.env_id;
    j["algo"] = ckpt.algo;
    j["seed"] = ckpt.seed;
    j["iteration"] = ckpt.iteration;
    j["lambda"] = ckpt.lambda;
    j["layer_sizes"] = ckpt.layer_sizes;
    j["dtype"] = "float64-le";
    const auto bytes = doubles_to_le_bytes(ckpt.params);
    j["params_base64"] = base64_encode(bytes.data(), bytes.size());
    return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ContractViolation(std::string("checkpoint: invalid JSON: ") + e.what());
    }
    Checkpoint ckpt;
    try {
        ckpt.schema_version = j.at("schema_version").get<int>();
        ckpt.env_id = j.at("env").get<std::string>();
        ckpt.algo = j.at("algo").get<std::string>();
        ckpt.seed = j.at("seed").get<std::uint64_t>();
        ckpt.iteration = j.at("iteration").get<int>();
        ckpt.lambda = j.at("lambda").get<double>();
        ckpt.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        require(j.at("dtype").get<std::string>() == "float64-le",
                "checkpoint: unsupported dtype");
        ckpt.params = doubles_from_le_bytes(base64_decode(j.at("params_base64").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(std::string("checkpoint: missing or malformed field: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "checkpoint: cannot open '" + path + "' for writing");
    out << checkpoint_to_json(ckpt);
    require(out.good(), "checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "checkpoint: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_json(buf.str());
}

} // namespace rpglab
