#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "ultra/pipeline.hpp"

using namespace ultra;

namespace {

// Fine enough truncation that the dust atom stays small.
Json rpc_config() {
  return Json::parse(R"({"source":{"type":"rpc","zeta":[0.2,0.4],"q":[0.4,0.8],"m":[20,20]},
                         "q":"auto","shape":"auto","eps":0.2,"delta":0.1,"disorders":400,
                         "centers":5000,"replicas":200,"rpc_samples":20000,"seed":5})");
}

Json model_config() {
  return Json::parse(R"({"source":{"type":"model","model":{"variant":"rem","N":6,"beta":1.5}},
                         "q":[0.5],"shape":[2],"eps":0.2,"delta":0.2,"disorders":6,"centers":50,
                         "replicas":300,"pairs":500,"seed":9})");
}

std::string config_error_field(const Json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.field;
  }
  return "";
}

}  // namespace

TEST_CASE("config validation names the field") {
  Json j = rpc_config();
  j.erase("seed");
  CHECK(config_error_field(j) == "seed");

  j = rpc_config();
  j["seed"] = -3;
  CHECK(config_error_field(j) == "seed");

  j = model_config();
  j["source"]["model"]["N"] = 15;
  CHECK(config_error_field(j) == "source.model");

  j = model_config();
  j["q"] = "auto";
  CHECK(config_error_field(j) == "q");

  j = model_config();
  j["shape"] = "auto";
  CHECK(config_error_field(j) == "shape");

  j = rpc_config();
  j["source"]["m"] = Json::array({2});
  CHECK(config_error_field(j) == "source.m");

  j = rpc_config();
  j["source"]["zeta"] = Json::array({0.5, 0.4});
  CHECK(config_error_field(j) == "source.zeta/q");

  j = model_config();
  j["q"] = Json::array({0.5, 0.4});
  CHECK(config_error_field(j) == "q");

  j = model_config();
  j["shape"] = Json::array({2, 2});
  CHECK(config_error_field(j) == "shape");

  j = model_config();
  j["eps"] = 0;
  CHECK(config_error_field(j) == "eps");

  j = model_config();
  j["mode"] = "fast";
  CHECK(config_error_field(j) == "mode");

  j = rpc_config();
  j["dfm_a"] = -1;
  CHECK(config_error_field(j) == "dfm_a");

  j = model_config();
  j["talagrand"] = Json{{"theta", 1.5}};
  CHECK(config_error_field(j) == "talagrand.theta");

  j = model_config();
  j["gg"] = Json{{"n", 2}, {"f", Json::array({Json{{"i", 1}, {"j", 3}, {"ge", 0.5}}})}};
  CHECK(config_error_field(j) == "gg.f");

  j = model_config();
  j["source"]["type"] = "sk";
  CHECK(config_error_field(j) == "source.type");
}

TEST_CASE("auto levels interlace the cascade levels") {
  auto c = config_from_json(rpc_config());
  CHECK(c.auto_q);
  CHECK(c.auto_shape);
  REQUIRE(c.q.size() == 2);
  CHECK(c.q[0] > 0);
  CHECK(c.q[0] < 0.4);
  CHECK(c.q[1] > 0.4);
  CHECK(c.q[1] < 0.8);
  CHECK(c.atoms_per_disorder() == 401);
}

TEST_CASE("per-realization eps") {
  Json j = rpc_config();
  j["eps"] = "auto";
  j["source"]["m"] = Json::array({2, 6});
  j["disorders"] = 20;
  j["rpc_samples"] = 100;
  auto c = config_from_json(j);
  CHECK(c.auto_eps);
  CHECK(config_to_json(c).at("eps") == "auto");
  auto rep = run(c).report;
  for (const auto& d : rep.at("disorders")) {
    REQUIRE(d.contains("eps"));
    if (d.at("found").get<bool>())
      CHECK(d.at("eps").get<double>() == doctest::Approx(2 * d.at("mass_error").at("dust").get<double>()));
  }

  Json m = model_config();
  m["eps"] = "auto";
  CHECK(config_error_field(m) == "eps");
  j["centers"] = "rates";
  CHECK(config_error_field(j) == "centers");
}

TEST_CASE("centers from the rates module") {
  Json j = rpc_config();
  j["centers"] = "rates";
  j["eta"] = 0.1;
  auto c = config_from_json(j);
  CHECK(c.centers >= 1);
  j["eta"] = 2.0;
  CHECK(config_error_field(j) == "eta");
}

TEST_CASE("config round trip") {
  auto c = config_from_json(model_config());
  Json echo = config_to_json(c);
  CHECK_FALSE(echo.contains("workers"));
  auto c2 = config_from_json(echo);
  CHECK(config_to_json(c2).dump() == echo.dump());
}

TEST_CASE("cascade self-test recovers the hierarchy") {
  auto c = config_from_json(rpc_config());
  auto rep = run(c).report;
  const Json& agg = rep.at("aggregate");
  CHECK(agg.at("f_total").at("estimate").get<double>() == 0.0);
  CHECK(agg.at("g_total").at("estimate").get<double>() == 0.0);
  CHECK(agg.at("search_success").at("estimate").get<double>() > 0.8);
  CHECK(agg.at("ultrametric_violation").at("estimate").get<double>() == 0.0);
  CHECK(agg.at("positivity_defect").at("estimate").get<double>() == 0.0);
  CHECK(agg.at("admissibility").at("law").get<std::string>() == "exact");

  double worst = 0;
  for (const auto& d : rep.at("disorders"))
    if (d.at("found").get<bool>()) worst = std::max(worst, d.at("mass_error").at("estimate").get<double>());
  CHECK(agg.at("mass_error_max").at("estimate").get<double>() == worst);

  REQUIRE(agg.at("mass_law").contains("gaps"));
  CHECK(agg.at("mass_law").at("gaps").size() == 4);
  for (const auto& g : agg.at("mass_law").at("gaps"))
    CHECK(std::abs(g.at("gap").get<double>()) <= 3 * g.at("stderr").get<double>());
}

// Three clusters: the smallest k whose mean PD(ζ̂) top-k mass reaches 1 - ε.
TEST_CASE("REM top cluster mass against the fitted cascade") {
  Json j = Json::parse(R"({"source":{"type":"model","model":{"variant":"rem","N":12,"beta":2.35}},
                           "q":[0.5],"shape":[3],"eps":0.2,"delta":0.2,"disorders":400,"centers":200,
                           "replicas":200,"pairs":20000,"rpc_samples":20000,"seed":7})");
  j["workers"] = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto rep = run(config_from_json(j)).report;
  const Json& law = rep.at("aggregate").at("mass_law");
  REQUIRE(law.contains("gaps"));
  CHECK(law.at("gaps").size() == 3);
  for (const auto& g : law.at("gaps")) {
    INFO(g.at("moment").get<std::string>());
    CHECK(std::abs(g.at("gap").get<double>()) <= 4 * g.at("stderr").get<double>());
  }
}

TEST_CASE("reports do not depend on the worker count") {
  for (Json j : {rpc_config(), model_config()}) {
    j["disorders"] = 6;
    j["rpc_samples"] = 500;
    std::string ref;
    for (int w : {1, 3}) {
      j["workers"] = w;
      std::string s = strip_timing(run(config_from_json(j)).report).dump();
      if (ref.empty())
        ref = s;
      else
        CHECK(s == ref);
    }
  }
}

TEST_CASE("diagnostics-only run and extras") {
  Json j = model_config();
  j["dfm_a"] = -1.0;
  j["talagrand"] = Json{{"theta", 0.5}, {"K", 200}, {"samples", 300}, {"compositions", Json::array({Json::array({2})})}};
  auto rep = run(config_from_json(j), false).report;
  CHECK_FALSE(rep.contains("disorders"));
  const Json& agg = rep.at("aggregate");
  CHECK_FALSE(agg.contains("f_total"));
  CHECK(agg.contains("gg_residual"));
  CHECK(agg.contains("overlap_histogram"));
  CHECK(agg.at("dfm_gap").at("a").get<double>() == -1.0);
  REQUIRE(agg.at("talagrand").size() == 1);
  CHECK(rep.contains("timing"));
  CHECK_FALSE(strip_timing(rep).contains("timing"));
  CHECK(rep.at("config").at("seed").get<std::uint64_t>() == 9);
}

TEST_CASE("strip_timing is recursive") {
  Json j = Json::parse(R"({"a":{"timing":1,"b":[{"timing":2,"c":3}]},"timing":4})");
  CHECK(strip_timing(j).dump() == R"({"a":{"b":[{"c":3}]}})");
}
