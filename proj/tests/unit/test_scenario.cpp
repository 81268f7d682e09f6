#include <catch_amalgamated.hpp>

#include "rfharvest/scenario.hpp"

using namespace rfharvest;
using Catch::Matchers::ContainsSubstring;

#ifndef RFHARVEST_SCENARIO_DIR
#define RFHARVEST_SCENARIO_DIR "scenarios"
#endif

TEST_CASE("empty file gives the shipped defaults", "[scenario]") {
  const auto ls = parse_scenario_string("");
  CHECK(serialize_scenario(ls.scenario) == serialize_scenario(default_scenario()));
  CHECK(ls.explicit_keys.empty());
  CHECK(assumptions(ls).size() == scenario_keys().size());
}

TEST_CASE("keys are applied and echoed", "[scenario]") {
  const auto ls = parse_scenario_string(R"(
# comment
[source]
kind = constant
level_dbm = -30   ; trailing comment
[storage]
cap1.c = 2.2
cap2.r_leak = inf
[management]
go_threshold = 2.1
profile.zigbee.t = 5.4
[engine]
stop_after_tx = 3
)");
  const auto& s = ls.scenario;
  CHECK(s.source.kind == SourceKind::Constant);
  CHECK(s.source.level.value() == -30.0);
  CHECK(s.storage.cap1.c.value() == 2.2);
  CHECK(std::isinf(s.storage.cap2.r_leak.value()));
  REQUIRE(s.management.go_threshold);
  CHECK(s.management.go_threshold->value() == 2.1);
  CHECK(s.management.node.profiles.zigbee.t.value() == 5.4);
  REQUIRE(s.engine.stop_after_tx);
  CHECK(*s.engine.stop_after_tx == 3);
  CHECK(ls.explicit_keys.size() == 7);
  const auto as = assumptions(ls);
  CHECK(as.size() == scenario_keys().size() - 7);
  for (const auto& a : as) CHECK_FALSE(ls.explicit_keys.count(a.key));
}

TEST_CASE("parse errors carry line numbers", "[scenario]") {
  const auto line_of = [](const std::string& text) {
    try {
      parse_scenario_string(text, "x.scenario");
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("[source]\nlevel_dbm = -30\ncolour = blue\n") == 3);
  CHECK(line_of("[sauce]\n") == 1);
  CHECK(line_of("level_dbm = -30\n") == 1);
  CHECK(line_of("[source]\nlevel_dbm = loud\n") == 2);
  CHECK(line_of("[source]\nlevel_dbm\n") == 2);
  CHECK(line_of("[engine]\nseed = 1\nseed = 2\n") == 3);
  CHECK(line_of("[frontend]\nstages = 2.5\n") == 2);
  CHECK(line_of("[frontend]\npreset = germanium\n") == 2);
  try {
    parse_scenario_string("[source]\ncolour = blue\n", "x.scenario");
  } catch (const ParseError& e) {
    CHECK_THAT(std::string(e.what()), ContainsSubstring("source.colour"));
    CHECK_THAT(std::string(e.what()), ContainsSubstring("x.scenario:2"));
  }
}

TEST_CASE("serialization round-trips", "[scenario]") {
  Scenario s = default_scenario();
  s.frontend.tank.reset();
  s.storage.cap2.v = Voltage{1.234567890123};
  s.engine.until_joules = Energy{0.32};
  s.management.go_threshold = Voltage{2.0};
  const auto text = serialize_scenario(s);
  const auto back = parse_scenario_string(text);
  CHECK(serialize_scenario(back.scenario) == text);
  CHECK_FALSE(back.scenario.frontend.tank);
  CHECK(back.scenario.storage.cap2.v.value() == 1.234567890123);
  // every key is written
  CHECK(back.explicit_keys.size() == scenario_keys().size());
}

TEST_CASE("frontend preset then overrides", "[scenario]") {
  const auto ls = parse_scenario_string("[frontend]\nstages = 10\npreset = zerovt_900MHz\n");
  CHECK(ls.scenario.frontend.rectifier.stages == 10);
  CHECK_FALSE(ls.scenario.frontend.tank);
  CHECK(ls.scenario.frontend.carrier.value() == 900e6);
  CHECK(ls.scenario.frontend.rectifier.v_drop == frontend_preset("zerovt_900MHz").params.v_drop);
  bool preset_origin = false;
  for (const auto& a : assumptions(ls)) preset_origin = preset_origin || (a.key == "frontend.v_drop" && a.source == "preset zerovt_900MHz");
  CHECK(preset_origin);
}

TEST_CASE("source preset", "[scenario]") {
  const auto ls = parse_scenario_string("[source]\npreset = monopole\n");
  CHECK(ls.scenario.source.kind == SourceKind::Constant);
  CHECK(ls.scenario.source.level.value() == -50.0);
}

TEST_CASE("sweepable keys", "[scenario]") {
  Scenario s = default_scenario();
  set_scenario_value(s, "frontend.stages", "12");
  CHECK(s.frontend.rectifier.stages == 12);
  set_scenario_value(s, "source.level_dbm", "-41");
  CHECK(get_scenario_value(s, "source.level_dbm") == "-41");
  CHECK_THROWS_AS(set_scenario_value(s, "engine.warp", "9"), ConfigError);
  CHECK_THROWS_AS(get_scenario_value(s, "engine.warp"), ConfigError);
}

TEST_CASE("shipped scenario files parse", "[scenario]") {
  for (const char* name : {"ideal_harvest.scenario", "realistic.scenario"}) {
    const auto ls = load_scenario_file(std::string(RFHARVEST_SCENARIO_DIR) + "/" + name);
    CHECK_NOTHROW(validate(ls.scenario));
    CHECK(serialize_scenario(parse_scenario_string(serialize_scenario(ls.scenario)).scenario) ==
          serialize_scenario(ls.scenario));
  }
  CHECK_THROWS_AS(load_scenario_file("/nonexistent/x.scenario"), ConfigError);
}

TEST_CASE("preset file output", "[scenario]") {
  const auto text = serialize_presets(paper_presets());
  CHECK_THAT(text, ContainsSubstring("[preset.schottky_100MHz]"));
  CHECK_THAT(text, ContainsSubstring("[preset.zerovt_100MHz]"));
  CHECK_THAT(text, ContainsSubstring("[preset.zerovt_900MHz]"));
}
