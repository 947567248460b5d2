#include "rpglab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace rpglab {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
                        c == '-';
        if (!ok) return false;
    }
    return key.front() != '.' && key.back() != '.' && key.find("..") == std::string::npos;
}

// strip a # comment that sits outside of quotes
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

[[noreturn]] void fail_line(int lineno, const std::string& message) {
    throw ContractViolation("config line " + std::to_string(lineno) + ": " + message);
}

} // namespace

ConfigValue parse_config_value(const std::string& token) {
    const std::string t = trim(token);
    require(!t.empty(), "config: empty value");
    ConfigValue value;
    value.text = t;

    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') {
        value.kind = ConfigValue::Kind::string_;
        value.text = t.substr(1, t.size() - 2);
        require(value.text.find('"') == std::string::npos,
                "config: embedded quotes are not supported");
        return value;
    }
    if (t == "true" || t == "false") {
        value.kind = ConfigValue::Kind::boolean;
        value.boolean = t == "true";
        return value;
    }
    {
        long long parsed = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), parsed);
        if (ec == std::errc() && ptr == t.data() + t.size()) {
            value.kind = ConfigValue::Kind::integer;
            value.integer = parsed;
            value.number = static_cast<double>(parsed);
            return value;
        }
    }
    {
        double parsed = 0.0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), parsed);
        if (ec == std::errc() && ptr == t.data() + t.size()) {
            value.kind = ConfigValue::Kind::number;
            value.number = parsed;
            return value;
        }
    }
    require(t.find('"') == std::string::npos, "config: unterminated string");
    require(valid_key(t) || t.find(' ') == std::string::npos,
            "config: cannot parse value '" + t + "'");
    value.kind = ConfigValue::Kind::string_;
    return value;
}

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail_line(lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_key(section)) fail_line(lineno, "bad section name '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_line(lineno, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail_line(lineno, "bad key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (map.count(full)) fail_line(lineno, "duplicate key '" + full + "'");
        try {
            map[full] = parse_config_value(line.substr(eq + 1));
        } catch (const ContractViolation& e) {
            fail_line(lineno, e.what());
        }
    }
    return map;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(ConfigMap& map, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos, "override '" + assignment + "' must look like key=value");
    const std::string key = trim(assignment.substr(0, eq));
    require(valid_key(key), "override has a malformed key '" + key + "'");
    map[key] = parse_config_value(assignment.substr(eq + 1));
}

namespace {

const ConfigValue& fetch(const ConfigMap& map, const std::string& key) {
    return map.at(key);
}

long long as_int(const ConfigMap& map, const std::string& key) {
    const auto& v = fetch(map, key);
    require(v.kind == ConfigValue::Kind::integer, "config key '" + key + "' needs an integer");
    return v.integer;
}

double as_double(const ConfigMap& map, const std::string& key) {
    const auto& v = fetch(map, key);
    require(v.kind == ConfigValue::Kind::integer || v.kind == ConfigValue::Kind::number,
            "config key '" + key + "' needs a number");
    return v.number;
}

bool as_bool(const ConfigMap& map, const std::string& key) {
    const auto& v = fetch(map, key);
    require(v.kind == ConfigValue::Kind::boolean,
            "config key '" + key + "' needs true or false");
    return v.boolean;
}

std::string as_string(const ConfigMap& map, const std::string& key) {
    const auto& v = fetch(map, key);
    require(v.kind == ConfigValue::Kind::string_, "config key '" + key + "' needs a string");
    return v.text;
}

} // namespace

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "env.id",
        "env.surrogate_sharpness",
        "env.surrogate_scale",
        "policy.lambda0",
        "policy.anneal",
        "policy.lambda_floor",
        "policy.hidden",
        "policy.form",
        "dynamics.gmm_components",
        "dynamics.gmm_window",
        "dynamics.prior_strength",
        "trainer.algo",
        "trainer.episodes",
        "trainer.batch",
        "trainer.learning_rate",
        "trainer.seed",
        "trainer.eval_every",
        "trainer.eval_episodes",
        "trainer.solve_threshold",
        "trainer.solve_window",
        "trainer.stop_on_solve",
        "trainer.grad_clip",
        "trainer.output_dir",
        "trainer.checkpoint_every",
        "cem.population",
        "cem.elites",
    };
    return keys;
}

TrainConfig config_from_map(const ConfigMap& map) {
    const auto& keys = known_config_keys();
    for (const auto& [key, value] : map)
        require(std::find(keys.begin(), keys.end(), key) != keys.end(),
                "unknown config key '" + key + "'");

    const std::string env_id = map.count("env.id") ? as_string(map, "env.id") : "cartpole";
    const std::string algo = map.count("trainer.algo") ? as_string(map, "trainer.algo") : "rpg";
    TrainConfig config = default_config(env_id, algo);

    auto set_int = [&](const std::string& key, auto& field) {
        if (map.count(key)) field = static_cast<std::decay_t<decltype(field)>>(as_int(map, key));
    };
    auto set_double = [&](const std::string& key, double& field) {
        if (map.count(key)) field = as_double(map, key);
    };

    set_double("env.surrogate_sharpness", config.surrogate_sharpness);
    set_double("env.surrogate_scale", config.surrogate_scale);
    set_double("policy.lambda0", config.lambda0);
    set_double("policy.anneal", config.anneal);
    set_double("policy.lambda_floor", config.lambda_floor);
    set_int("policy.hidden", config.hidden);
    if (map.count("policy.form")) {
        const std::string form = as_string(map, "policy.form");
        if (form == "merged")
            config.form = RelaxedForm::merged;
        else if (form == "prior")
            config.form = RelaxedForm::prior;
        else
            throw ContractViolation("config key 'policy.form' must be merged or prior, got '" +
                                    form + "'");
    }
    set_int("dynamics.gmm_components", config.gmm_components);
    set_int("dynamics.gmm_window", config.gmm_window);
    set_double("dynamics.prior_strength", config.prior_strength);
    set_int("trainer.episodes", config.episodes);
    set_int("trainer.batch", config.batch);
    set_double("trainer.learning_rate", config.learning_rate);
    if (map.count("trainer.seed")) {
        const long long seed = as_int(map, "trainer.seed");
        require(seed >= 0, "config key 'trainer.seed' must be nonnegative");
        config.seed = static_cast<std::uint64_t>(seed);
    }
    set_int("trainer.eval_every", config.eval_every);
    set_int("trainer.eval_episodes", config.eval_episodes);
    if (map.count("trainer.solve_threshold"))
        config.solve_threshold = as_double(map, "trainer.solve_threshold");
    set_int("trainer.solve_window", config.solve_window);
    if (map.count("trainer.stop_on_solve"))
        config.stop_on_solve = as_bool(map, "trainer.stop_on_solve");
    set_double("trainer.grad_clip", config.grad_clip);
    if (map.count("trainer.output_dir")) config.output_dir = as_string(map, "trainer.output_dir");
    set_int("trainer.checkpoint_every", config.checkpoint_every);
    set_int("cem.population", config.cem_population);
    set_int("cem.elites", config.cem_elites);
    return config;
}

} // namespace rpglab
