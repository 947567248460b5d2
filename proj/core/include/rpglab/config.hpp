#pragma once

#include <map>
#include <string>

#include "rpglab/trainer.hpp"

namespace rpglab {

/// Typed value from the config file. Bare words parse as strings, so both
/// `id = "cartpole"` and `--set env.id=cartpole` work.
struct ConfigValue {
    enum class Kind { string_, integer, number, boolean };
    Kind kind = Kind::string_;
    std::string text; // string payload, or the raw token for diagnostics
    long long integer = 0;
    double number = 0.0;
    bool boolean = false;
};

using ConfigMap = std::map<std::string, ConfigValue>;

/// Subset of TOML: [section] headers (dotted sections allowed), key = value
/// lines, # comments, quoted or bare strings, integers, floats, booleans.
/// Keys flatten to section.key. Duplicate keys are rejected.
ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::string& path);

/// Parse a single value token the same way file values parse.
ConfigValue parse_config_value(const std::string& token);

/// `dotted.key=value` from the command line; replaces any file value.
void apply_override(ConfigMap& map, const std::string& assignment);

/// Build the training configuration. env.id and trainer.algo pick the
/// per-task defaults; every other key overrides one field. Unknown keys are
/// an error naming the key.
TrainConfig config_from_map(const ConfigMap& map);

/// All recognized dotted keys, for help output and tests.
const std::vector<std::string>& known_config_keys();

} // namespace rpglab
