#include <doctest.h>

#include "rpglab/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

using namespace rpglab;

namespace {

const char* kSample = R"([env]
id = "mountaincar"   # task selection
surrogate_sharpness = 25.0

[policy]
lambda0 = 0.8
hidden = 32
form = merged

[trainer]
algo = "rpg"
episodes = 800
stop_on_solve = false
learning_rate = 5e-3
)";

} // namespace

TEST_SUITE("config") {

TEST_CASE("value parser covers every kind") {
    CHECK(parse_config_value("42").kind == ConfigValue::Kind::integer);
    CHECK(parse_config_value("42").integer == 42);
    CHECK(parse_config_value("-7").integer == -7);
    CHECK(parse_config_value("0.5").kind == ConfigValue::Kind::number);
    CHECK(parse_config_value("1e-3").number == doctest::Approx(1e-3));
    CHECK(parse_config_value("true").kind == ConfigValue::Kind::boolean);
    CHECK(parse_config_value("false").boolean == false);
    CHECK(parse_config_value("\"cartpole\"").kind == ConfigValue::Kind::string_);
    CHECK(parse_config_value("\"cartpole\"").text == "cartpole");
    CHECK(parse_config_value("cartpole").kind == ConfigValue::Kind::string_);
    CHECK(parse_config_value("cartpole").text == "cartpole");
    CHECK(parse_config_value("  7 ").integer == 7);
    // integers also satisfy number consumers
    CHECK(parse_config_value("42").number == doctest::Approx(42.0));
}

TEST_CASE("value parser rejects junk") {
    CHECK_THROWS_AS(parse_config_value(""), ContractViolation);
    CHECK_THROWS_AS(parse_config_value("   "), ContractViolation);
    CHECK_THROWS_AS(parse_config_value("\"open"), ContractViolation);
    CHECK_THROWS_AS(parse_config_value("two words"), ContractViolation);
}

TEST_CASE("file text parses into dotted keys") {
    const ConfigMap map = parse_config_text(kSample);
    REQUIRE(map.count("env.id") == 1);
    CHECK(map.at("env.id").text == "mountaincar");
    CHECK(map.at("env.surrogate_sharpness").number == doctest::Approx(25.0));
    CHECK(map.at("policy.lambda0").number == doctest::Approx(0.8));
    CHECK(map.at("policy.hidden").integer == 32);
    CHECK(map.at("policy.form").text == "merged"); // bare word
    CHECK(map.at("trainer.algo").text == "rpg");
    CHECK(map.at("trainer.episodes").integer == 800);
    CHECK(map.at("trainer.stop_on_solve").boolean == false);
    CHECK(map.at("trainer.learning_rate").number == doctest::Approx(5e-3));
    CHECK(map.size() == 9);
}

TEST_CASE("comments, blanks, and quoted hashes") {
    const ConfigMap map = parse_config_text(
        "# leading comment\n"
        "\n"
        "name = \"a#b\"  # hash inside quotes survives\n"
        "n = 3\n");
    CHECK(map.at("name").text == "a#b");
    CHECK(map.at("n").integer == 3);
}

TEST_CASE("parse errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_config_text("a = 1\nb 2\n"),
                         doctest::Contains("line 2"), ContractViolation);
    CHECK_THROWS_WITH_AS(parse_config_text("[bad\n"), doctest::Contains("line 1"),
                         ContractViolation);
    CHECK_THROWS_WITH_AS(parse_config_text("x = 1\nx = 2\n"),
                         doctest::Contains("duplicate key 'x'"), ContractViolation);
    CHECK_THROWS_AS(parse_config_text("[]\nx = 1\n"), ContractViolation);
    CHECK_THROWS_AS(parse_config_text("bad key = 1\n"), ContractViolation);
}

TEST_CASE("duplicate across section and dotted spelling") {
    CHECK_THROWS_WITH_AS(parse_config_text("trainer.batch = 5\n[trainer]\nbatch = 6\n"),
                         doctest::Contains("duplicate key 'trainer.batch'"), ContractViolation);
}

TEST_CASE("overrides replace file values") {
    ConfigMap map = parse_config_text("trainer.episodes = 100\n");
    apply_override(map, "trainer.episodes=250");
    apply_override(map, "policy.lambda0=0.25");
    CHECK(map.at("trainer.episodes").integer == 250);
    CHECK(map.at("policy.lambda0").number == doctest::Approx(0.25));
    CHECK_THROWS_AS(apply_override(map, "no_equals_sign"), ContractViolation);
    CHECK_THROWS_AS(apply_override(map, "spaced key=1"), ContractViolation);
}

TEST_CASE("config_from_map starts from per-task defaults") {
    ConfigMap map;
    apply_override(map, "env.id=mountaincar");
    const TrainConfig base = config_from_map(map);
    const TrainConfig expected = default_config("mountaincar", "rpg");
    CHECK(base.env_id == "mountaincar");
    CHECK(base.algo == "rpg");
    CHECK(base.episodes == expected.episodes);
    CHECK(base.batch == expected.batch);
    CHECK(base.solve_threshold.has_value() == expected.solve_threshold.has_value());
}

TEST_CASE("config_from_map applies every override kind") {
    ConfigMap map = parse_config_text(kSample);
    apply_override(map, "trainer.batch=7");
    apply_override(map, "trainer.seed=11");
    apply_override(map, "trainer.solve_threshold=-150");
    apply_override(map, "policy.form=prior");
    apply_override(map, "cem.population=30");
    apply_override(map, "cem.elites=4");
    apply_override(map, "dynamics.gmm_components=3");
    apply_override(map, "trainer.output_dir=/tmp/run");
    const TrainConfig config = config_from_map(map);
    CHECK(config.env_id == "mountaincar");
    CHECK(config.episodes == 800);
    CHECK(config.batch == 7);
    CHECK(config.seed == 11);
    CHECK(config.learning_rate == doctest::Approx(5e-3));
    CHECK(config.lambda0 == doctest::Approx(0.8));
    CHECK(config.hidden == 32);
    CHECK(config.form == RelaxedForm::prior);
    CHECK(config.surrogate_sharpness == doctest::Approx(25.0));
    CHECK(config.stop_on_solve == false);
    REQUIRE(config.solve_threshold.has_value());
    CHECK(*config.solve_threshold == doctest::Approx(-150.0));
    CHECK(config.cem_population == 30);
    CHECK(config.cem_elites == 4);
    CHECK(config.gmm_components == 3);
    CHECK(config.output_dir == "/tmp/run");
}

TEST_CASE("unknown keys are named in the error") {
    ConfigMap map;
    apply_override(map, "trainer.episodez=5");
    CHECK_THROWS_WITH_AS(config_from_map(map),
                         doctest::Contains("unknown config key 'trainer.episodez'"),
                         ContractViolation);
}

TEST_CASE("type mismatches are named in the error") {
    ConfigMap map;
    apply_override(map, "trainer.episodes=fast");
    CHECK_THROWS_WITH_AS(config_from_map(map), doctest::Contains("trainer.episodes"),
                         ContractViolation);
    ConfigMap map2;
    apply_override(map2, "trainer.stop_on_solve=1");
    CHECK_THROWS_WITH_AS(config_from_map(map2), doctest::Contains("true or false"),
                         ContractViolation);
    ConfigMap map3;
    apply_override(map3, "policy.lambda0=soon");
    CHECK_THROWS_AS(config_from_map(map3), ContractViolation);
    ConfigMap map4;
    apply_override(map4, "policy.form=fancy");
    CHECK_THROWS_WITH_AS(config_from_map(map4), doctest::Contains("merged or prior"),
                         ContractViolation);
    ConfigMap map5;
    apply_override(map5, "trainer.seed=-1");
    CHECK_THROWS_AS(config_from_map(map5), ContractViolation);
}

TEST_CASE("every known key is consumable") {
    ConfigMap map;
    for (const auto& key : known_config_keys()) {
        ConfigValue v;
        if (key == "env.id") v = parse_config_value("cartpole");
        else if (key == "trainer.algo") v = parse_config_value("reinforce");
        else if (key == "policy.form") v = parse_config_value("merged");
        else if (key == "trainer.output_dir") v = parse_config_value("\"out\"");
        else if (key == "trainer.stop_on_solve") v = parse_config_value("true");
        else if (key == "trainer.solve_threshold") v = parse_config_value("400");
        else v = parse_config_value("1");
        map[key] = v;
    }
    const TrainConfig config = config_from_map(map); // no throw
    CHECK(config.algo == "reinforce");
    CHECK(config.batch == 1);
    CHECK(known_config_keys().size() == map.size());
    CHECK(std::is_sorted(known_config_keys().begin(), known_config_keys().end(),
                         [](const auto&, const auto&) { return false; })); // stable order
}

TEST_CASE("file loading") {
    const std::string path = "config_roundtrip.toml";
    {
        std::ofstream out(path);
        out << kSample;
    }
    const ConfigMap map = load_config_file(path);
    CHECK(map.at("env.id").text == "mountaincar");
    std::remove(path.c_str());
    CHECK_THROWS_WITH_AS(load_config_file("missing_config.toml"),
                         doctest::Contains("missing_config.toml"), ContractViolation);
}

} // TEST_SUITE
