#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "maveric/config.hpp"

using maveric::Config;

TEST_CASE("canonical json carries exactly the five sections") {
  const Config cfg;
  const auto j = nlohmann::json::parse(cfg.canonical_json());
  CHECK(j.size() == 5);
  CHECK(j.contains("sim"));
  CHECK(j.contains("controllers"));
  CHECK(j.contains("personas"));
  CHECK(j.contains("learn"));
  CHECK(j.contains("stylespace"));
  CHECK(j["sim"]["dt"].get<double>() == 0.1);
  CHECK(j["sim"]["window_steps"].get<int>() == 30);
  CHECK(j["controllers"]["lambda"].get<double>() == 80.0);
  CHECK(j["controllers"]["delta"].get<double>() == 0.5);
  CHECK(j["learn"]["c2"].get<double>() == 5.0);
}

TEST_CASE("hash is stable for equal configs and sensitive to any field") {
  Config a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);

  b.learn.epochs = a.learn.epochs + 1;
  CHECK(a.hash() != b.hash());

  Config c;
  c.sim.dt = 0.2;
  CHECK(a.hash() != c.hash());
}

TEST_CASE("round-trip through json text preserves every field") {
  Config a;
  a.sim.posted_speed = 30.0;
  a.controllers.kp_v = 1.25;
  a.personas.param_jitter = 0.2;
  a.learn.batch_size = 128;
  a.stylespace.condition_delta_adb = 10.0;
  const Config b = Config::from_json_text(a.canonical_json());
  CHECK(a.hash() == b.hash());
  CHECK(b.sim.posted_speed == 30.0);
  CHECK(b.controllers.kp_v == 1.25);
  CHECK(b.personas.param_jitter == 0.2);
  CHECK(b.learn.batch_size == 128);
  CHECK(b.stylespace.condition_delta_adb == 10.0);
}

TEST_CASE("missing fields keep their defaults") {
  const Config c = Config::from_json_text(R"({"sim": {"dt": 0.05}})");
  CHECK(c.sim.dt == 0.05);
  CHECK(c.sim.window_steps == 30);
  CHECK(c.learn.hidden_width == 64);
}

TEST_CASE("apply_override sets doubles, ints, and nested paths") {
  Config c;
  c.apply_override("sim.dt=0.05");
  CHECK(c.sim.dt == 0.05);
  c.apply_override("learn.epochs=7");
  CHECK(c.learn.epochs == 7);
  c.apply_override("controllers.lambda=120");
  CHECK(c.controllers.lambda == 120.0);
  c.apply_override("stylespace.perp_angles=24");
  CHECK(c.stylespace.perp_angles == 24);
}

TEST_CASE("apply_override rejects unknown and malformed paths") {
  Config c;
  CHECK_THROWS_AS(c.apply_override("sim.no_such_field=1"), std::invalid_argument);
  CHECK_THROWS_AS(c.apply_override("bogus.dt=1"), std::invalid_argument);
  CHECK_THROWS_AS(c.apply_override("sim.dt"), std::invalid_argument);
  CHECK_THROWS_AS(c.apply_override("sim=1"), std::invalid_argument);
}

TEST_CASE("load reads a config file and missing file throws") {
  const std::string path = "test_config_tmp.json";
  {
    std::ofstream out(path);
    out << R"({"learn": {"epochs": 3}, "sim": {"posted_speed": 20.0}})";
  }
  const Config c = Config::load(path);
  CHECK(c.learn.epochs == 3);
  CHECK(c.sim.posted_speed == 20.0);
  std::remove(path.c_str());

  CHECK_THROWS_AS(Config::load("definitely_missing.json"), std::runtime_error);
}

TEST_CASE("posted speed default is 55 mph in SI") {
  const Config c;
  CHECK(c.sim.posted_speed == doctest::Approx(24.5872).epsilon(1e-6));
}
