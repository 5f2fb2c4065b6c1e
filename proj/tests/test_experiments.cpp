#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cat0lab/errors.hpp"
#include "cat0lab/experiments.hpp"

using namespace cat0lab;
using nlohmann::json;

namespace {

json z_drift_config(int n_max) {
  return json{{"group", {{"kind", "lattice"}, {"rank", 1}}},
              {"measure", {{"support", json::array({json::array({1}),
                                                    json::array({-1})})}}},
              {"n_max", n_max}};
}

json f2_measure_config() {
  return json{{"group", {{"kind", "free"}, {"rank", 2}}},
              {"measure", {{"support", json::array({"a", "A", "b", "B"})}}}};
}

json z4_rotation_config() {
  return json{
      {"group", {{"kind", "cyclic"}, {"order", 4}}},
      {"space", {{"kind", "euclidean"}, {"dim", 2}}},
      {"action",
       {{"images",
         json::array({{{"kind", "euclidean"},
                       {"matrix", json::array({json::array({0, -1}),
                                               json::array({1, 0})})},
                       {"translation", json::array({0, 0})}}})}}},
      {"start", json::array({1.0, 0.0})}};
}

json parabolic_config() {
  return json{
      {"group", {{"kind", "lattice"}, {"rank", 1}}},
      {"space", {{"kind", "hyperbolic"}}},
      {"action",
       {{"images", json::array({{{"kind", "mobius"},
                                 {"a", 1}, {"b", 1}, {"c", 0}, {"d", 1}}})}}},
      {"start", {{"x", 0.0}, {"y", 1.0}}}};
}

}  // namespace

TEST_CASE("cmd_drift exact on Z") {
  RunRecord rec = cmd_drift(z_drift_config(10));
  CHECK(rec.exit_code == 0);
  CHECK(rec.subcommand == "drift");
  CHECK(!rec.config_hash.empty());
  CHECK(rec.version == std::string(kVersion));
  const json& s = rec.payload.at("series");
  CHECK(s.at("Ln_rational")[1] == "1");
  CHECK(s.at("Ln_rational")[2] == "1");
  CHECK(s.at("Ln_rational")[4] == "3/2");
  CHECK(s.at("exact") == true);
  CHECK(rec.warnings.empty());
}

TEST_CASE("cmd_drift monte carlo on F2") {
  json cfg = f2_measure_config();
  cfg["n_max"] = 200;
  cfg["mode"] = "monte_carlo";
  cfg["samples"] = 2000;
  cfg["seed"] = 42;
  RunRecord rec = cmd_drift(cfg);
  CHECK(rec.exit_code == 0);
  double est = rec.payload.at("drift_estimate").get<double>();
  CHECK(est == doctest::Approx(0.5).epsilon(0.1));
  CHECK(!rec.warnings.empty());

  // determinism: identical config and seed reproduce the payload exactly
  RunRecord again = cmd_drift(cfg);
  CHECK(rec.payload.dump() == again.payload.dump());
}

TEST_CASE("cmd_drift schema errors") {
  json cfg = z_drift_config(5);
  cfg["bogus"] = 1;
  CHECK_THROWS_AS(cmd_drift(cfg), SchemaError);

  cfg = z_drift_config(5);
  cfg["samples"] = 100;  // samples without monte_carlo mode
  CHECK_THROWS_AS(cmd_drift(cfg), SchemaError);

  cfg = z_drift_config(5);
  cfg["measure"] = json{{"support", json::array()}};
  CHECK_THROWS_AS(cmd_drift(cfg), SchemaError);

  cfg = z_drift_config(5);
  cfg.erase("n_max");
  CHECK_THROWS_AS(cmd_drift(cfg), SchemaError);
}

TEST_CASE("cmd_drift writes record.json and drift.csv") {
  auto dir = std::filesystem::temp_directory_path() / "cat0lab_drift_out";
  std::filesystem::remove_all(dir);
  json cfg = z_drift_config(6);
  cfg["out_dir"] = dir.string();
  RunRecord rec = cmd_drift(cfg);
  CHECK(std::filesystem::exists(dir / "record.json"));
  CHECK(std::filesystem::exists(dir / "drift.csv"));
  std::ifstream csv(dir / "drift.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "n,Ln,Ltilde,Ln_over_n,stderr");
  std::ifstream rj(dir / "record.json");
  json stored = json::parse(rj);
  CHECK(stored.at("payload") == rec.payload);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cmd_conv_comb exact on Z holds") {
  json cfg = z_drift_config(8);
  cfg["combination"] = json{{"coefficients", json::array({"1/2", "1/2"})}};
  RunRecord rec = cmd_conv_comb(cfg);
  CHECK(rec.exit_code == 0);
  CHECK(rec.payload.at("holds") == true);
  CHECK(rec.payload.at("factor") == "5/2");
  CHECK(!rec.warnings.empty());  // truncation is always recorded
}

TEST_CASE("cmd_conv_comb rejects non-normalized coefficients") {
  json cfg = z_drift_config(8);
  cfg["combination"] = json{{"coefficients", json::array({"1/2", "1/4"})}};
  CHECK_THROWS_AS(cmd_conv_comb(cfg), SchemaError);
  // with the flag the same spec is fine
  cfg["combination"]["renormalize"] = true;
  CHECK(cmd_conv_comb(cfg).exit_code == 0);
}

TEST_CASE("cmd_fixed_point: rotation finds the origin") {
  RunRecord rec = cmd_fixed_point(z4_rotation_config());
  CHECK(rec.exit_code == 0);
  CHECK(rec.payload.at("found") == true);
  auto pt = rec.payload.at("point");
  CHECK(std::abs(pt[0].get<double>()) < 1e-6);
  CHECK(std::abs(pt[1].get<double>()) < 1e-6);
}

TEST_CASE("cmd_fixed_point: translation reports failure") {
  json cfg{{"group", {{"kind", "lattice"}, {"rank", 1}}},
           {"space", {{"kind", "euclidean"}, {"dim", 1}}},
           {"action",
            {{"images", json::array({{{"kind", "euclidean"},
                                      {"matrix", json::array({json::array({1})})},
                                      {"translation", json::array({1.0})}}})}}},
           {"start", json::array({0.0})}};
  RunRecord rec = cmd_fixed_point(cfg);
  CHECK(rec.exit_code == 0);  // a failure report is a completed run
  CHECK(rec.payload.at("found") == false);
  CHECK(rec.payload.at("delta_infimum").get<double>() == 1.0);
  CHECK(!rec.warnings.empty());
}

TEST_CASE("cmd_shalom on the parabolic action") {
  json cfg = parabolic_config();
  cfg["n_max"] = 3;
  cfg["seed"] = 9;
  RunRecord rec = cmd_shalom(cfg);
  CHECK(rec.exit_code == 0);
  const json& runs = rec.payload.at("runs");
  REQUIRE(runs.size() == 3);
  for (const auto& r : runs) {
    CHECK(r.at("outcome") == "certificate");
    int n = r.at("n").get<int>();
    double rn = r.at("certificate").at("r_n").get<double>();
    CHECK(r.at("certificate").at("delta_at_vn").get<double>() <= rn / n);
  }
}

TEST_CASE("cmd_grigorchuk_audit small radii") {
  json cfg{{"radius", 2}, {"order_cap", 64}, {"spot_checks", 50}, {"seed", 3}};
  RunRecord rec = cmd_grigorchuk_audit(cfg);
  CHECK(rec.exit_code == 0);
  CHECK(rec.payload.at("orders_all_powers_of_two") == true);
  CHECK(rec.payload.at("exceeds_cap") == 0);
  // ball(2) holds e, the four involutions, ac/ca/ad/da (orders 4, 8) and
  // ab/ba of order 16
  for (const auto& h : rec.payload.at("order_histogram")) {
    std::int64_t o = h.at("order").get<std::int64_t>();
    CHECK((o == 1 || o == 2 || o == 4 || o == 8 || o == 16));
  }
  CHECK(rec.payload.at("max_order") == 16);
  for (const auto& [name, ok] : rec.payload.at("relations").items())
    CHECK(ok == true);
  CHECK(rec.payload.at("spot_checks").at("disagree") == 0);

  // radius 0: just the identity
  RunRecord r0 = cmd_grigorchuk_audit(json{{"radius", 0}});
  CHECK(r0.payload.at("element_count") == 1);
  CHECK(r0.payload.at("max_order") == 1);

  // cap too small: flagged but the run completes
  RunRecord capped = cmd_grigorchuk_audit(json{{"radius", 3}, {"order_cap", 2}});
  CHECK(capped.payload.at("exceeds_cap").get<std::int64_t>() > 0);
  CHECK(!capped.warnings.empty());
}

TEST_CASE("cmd_space_check bundled spaces pass") {
  json cfg{{"triples", 300}, {"seed", 5}};
  RunRecord rec = cmd_space_check(cfg);
  CHECK(rec.exit_code == 0);
  for (const auto& r : rec.payload.at("spaces")) {
    CHECK(r.at("pass") == true);
    CHECK(r.at("max_cn_violation").get<double>() <= 1e-9);
  }

  // explicit space list
  json cfg2{{"triples", 100},
            {"spaces", json::array({{{"kind", "euclidean"}, {"dim", 3}}})}};
  RunRecord rec2 = cmd_space_check(cfg2);
  CHECK(rec2.exit_code == 0);
  CHECK(rec2.payload.at("spaces").size() == 1);
}

TEST_CASE("run_experiment dispatch") {
  CHECK(run_experiment("drift", z_drift_config(4)).subcommand == "drift");
  CHECK_THROWS_AS(run_experiment("nope", json::object()), SchemaError);
}
