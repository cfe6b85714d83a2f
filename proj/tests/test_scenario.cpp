#include <catch_amalgamated.hpp>

#include <sstream>

#include "modstab/scenario.hpp"

using namespace modstab;

namespace {

RunOptions fixed(std::size_t probes = 64) {
  RunOptions o;
  o.timestamp = "2024-01-01T00:00:00Z";
  o.probes_override = probes;
  return o;
}

json small_axioms() {
  json c = builtin_scenario("axioms-suite");
  c["samples"] = 200;
  return c;
}

std::size_t count_failing(const std::vector<json>& recs) {
  std::size_t n = 0;
  for (const auto& r : recs)
    if (!r.value("pass", false)) ++n;
  return n;
}

}  // namespace

TEST_CASE("builtin scenarios parse") {
  const auto names = list_builtin_scenarios();
  CHECK(names.size() == 6);
  for (const auto& n : names) {
    INFO(n);
    const json c = builtin_scenario(n);
    CHECK(c["name"] == n);
    CHECK_NOTHROW(parse_scenario(c));
  }
  CHECK_THROWS_AS(builtin_scenario("nope"), ConfigError);
}

TEST_CASE("modular shorthand") {
  CHECK(parse_modular_shorthand("norm").kind() == ModularKind::norm);
  const auto p = parse_modular_shorthand("power:2.5");
  CHECK(p.kind() == ModularKind::power);
  CHECK(p.p() == 2.5);
  const auto o = parse_modular_shorthand("orlicz:square,kappa=1.5");
  CHECK(o.preset() == OrliczPreset::square);
  CHECK(o.kappa() == 1.5);
  CHECK_THROWS_AS(parse_modular_shorthand("power:"), ConfigError);
  CHECK_THROWS_AS(parse_modular_shorthand("power:2x"), ConfigError);
  CHECK_THROWS_AS(parse_modular_shorthand("power:0.5"), ConfigError);
  CHECK_THROWS_AS(parse_modular_shorthand("orlicz:cube"), ConfigError);
  CHECK_THROWS_AS(parse_modular_shorthand("norm,gamma=2"), ConfigError);
  CHECK_THROWS_AS(parse_modular_shorthand("sup"), ConfigError);
  CHECK(parse_modular(json{{"kind", "power"}, {"p", 3}}).p() == 3.0);
  CHECK_THROWS_AS(parse_modular(json{{"kind", "power"}}), ConfigError);
  CHECK_THROWS_AS(parse_modular(json{{"kind", "norm"}, {"q", 1}}), ConfigError);
}

TEST_CASE("scenario validation") {
  const json good = builtin_scenario("corollary-ascending-p05");
  const auto sc = parse_scenario(good);
  CHECK(sc.dim == 4);
  CHECK(sc.psi->calibrate);
  CHECK(sc.iteration.n_max == 40);
  CHECK(sc.probe_count == 512);

  const auto bad = [&](auto edit) {
    json c = good;
    edit(c);
    return c;
  };
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["colour"] = "red"; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["s"] = {1.0, 0.0}; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["s"] = {0.8, 0.8}; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["checks"] = {"inequality_C"}; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c.erase("checks"); })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c.erase("map"); })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["psi"] = nullptr; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["iteration"]["direction"] = "descending"; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["psi"]["L"] = 1.0; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["psi"]["p"] = 1.0; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["probes"]["radius"] = 0.0; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["probes"]["seed"] = -1; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["algebra"] = "octonion"; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["dim"] = 3; })), ConfigError);
  CHECK_THROWS_AS(parse_scenario(bad([](json& c) { c["map"]["perturbation"]["name"] = "cubic"; })), ConfigError);
}

TEST_CASE("report header comes first") {
  const auto res = run_scenario(small_axioms(), fixed());
  REQUIRE(res.records.size() >= 2);
  const json& h = res.records.front();
  CHECK(h["stage"] == "header");
  CHECK(h["schema"] == "modstab-report/1");
  CHECK(h["tool_version"] == std::string(kToolVersion));
  CHECK(h["scenario"] == "axioms-suite");
  CHECK(h["timestamp"] == "2024-01-01T00:00:00Z");
  CHECK(h["config_hash"].get<std::string>().size() == 16);
  CHECK(res.records[1]["stage"] == "config");
  CHECK(res.exit_code == 0);
  // 4 checks x 3 modulars
  std::size_t checks = 0;
  for (const auto& r : res.records)
    if (r["stage"] == "check") ++checks;
  CHECK(checks == 12);
}

TEST_CASE("reports are deterministic") {
  const json cfg = builtin_scenario("superstability-commutator");
  const auto a = run_scenario(cfg, fixed());
  const auto b = run_scenario(cfg, fixed());
  CHECK(to_jsonl(a.records) == to_jsonl(b.records));
  CHECK(a.exit_code == 0);

  // the default timestamp is the only varying field
  auto c = run_scenario(cfg, RunOptions{std::nullopt, 64, std::nullopt});
  auto d = run_scenario(cfg, fixed());
  c.records.front().erase("timestamp");
  d.records.front().erase("timestamp");
  CHECK(to_jsonl(c.records) == to_jsonl(d.records));

  RunOptions other = fixed();
  other.seed_override = 7;
  const auto e = run_scenario(cfg, other);
  CHECK(e.records.front()["seed"] == 7);
  CHECK(e.records.front()["config_hash"] != a.records.front()["config_hash"]);
}

TEST_CASE("jsonl has one record per line") {
  const auto res = run_scenario(small_axioms(), fixed());
  std::istringstream in(to_jsonl(res.records));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    CHECK(json::parse(line) == res.records[n]);
    ++n;
  }
  CHECK(n == res.records.size());
}

TEST_CASE("configuration errors exit 2 after a header") {
  json c = builtin_scenario("corollary-ascending-p05");
  c["s"] = {1.5, 0.0};
  const auto res = run_scenario(c, fixed());
  CHECK(res.exit_code == 2);
  REQUIRE(res.records.size() == 2);
  CHECK(res.records[0]["stage"] == "header");
  CHECK(res.records[1]["stage"] == "config");
  CHECK(res.records[1]["pass"] == false);
  CHECK(res.records[1]["error"].get<std::string>().find("|s| < 1") != std::string::npos);

  CHECK(run_scenario(json::array(), fixed()).exit_code == 2);
  CHECK(run_scenario_file("/nonexistent/config.json").exit_code == 2);
}

TEST_CASE("falsifier exits 1 with failing inequality records") {
  const auto res = run_scenario(builtin_scenario("lemma-falsifier"), fixed());
  CHECK(res.exit_code == 1);
  bool a_fail = false, b_fail = false;
  for (const auto& r : res.records) {
    if (r["stage"] != "check" || r["pass"] == true) continue;
    if (r["check"] == "inequality_A") a_fail = true;
    if (r["check"] == "inequality_B") b_fail = true;
  }
  CHECK(a_fail);
  CHECK(b_fail);
  // probe 0 is diagonal, probe 8 is on the axis (count 64)
  for (const auto& r : res.records) {
    if (r["stage"] != "check" || r["probe_id"].is_null()) continue;
    if (r["check"] == "inequality_A" && r["probe_id"] == 0) CHECK(r["pass"] == false);
    if (r["check"] == "inequality_B" && r["probe_id"] == 8) CHECK(r["pass"] == false);
  }
}

TEST_CASE("exit code precedence") {
  const json ok = {{"stage", "check"}, {"pass", true}};
  const json fail = {{"stage", "check"}, {"pass", false}};
  const json cfg = {{"stage", "config"}, {"pass", false}};
  CHECK(exit_code_of({ok, ok}) == 0);
  CHECK(exit_code_of({ok, fail}) == 1);
  CHECK(exit_code_of({fail, cfg}) == 2);
}

TEST_CASE("config hash is stable and sensitive") {
  const json a = builtin_scenario("axioms-suite");
  json b = a;
  CHECK(config_hash(a) == config_hash(b));
  b["samples"] = 10001;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("theta calibration is recorded") {
  const auto res = run_scenario(builtin_scenario("corollary-descending-p2"), fixed());
  const json& cfg = res.records[1];
  REQUIRE(cfg["stage"] == "config");
  const json& resolved = cfg["resolved"];
  CHECK(resolved["L"] == 0.5);
  CHECK(resolved["direction"] == "descending");
  const double star = resolved["calibration"]["theta_star"];
  CHECK(resolved["theta"].get<double>() == Catch::Approx(1.25 * star));
  CHECK(res.exit_code == 0);
}
