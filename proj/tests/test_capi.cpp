#include <doctest.h>

#include <cstring>
#include <nlohmann/json.hpp>
#include <string>

#include "cat0lab/cat0lab.h"

using nlohmann::json;

namespace {

const char* kDriftConfig = R"({
  "group": {"kind": "lattice", "rank": 1},
  "measure": {"support": [[1], [-1]]},
  "n_max": 6
})";

}  // namespace

TEST_CASE("c0l_run drift round trip") {
  c0l_result* res = nullptr;
  int code = c0l_run("drift", kDriftConfig, &res);
  REQUIRE(code == 0);
  REQUIRE(res != nullptr);
  CHECK(c0l_result_exit_code(res) == 0);
  json rec = json::parse(c0l_result_json(res));
  CHECK(rec.at("subcommand") == "drift");
  CHECK(rec.at("payload").at("series").at("Ln_rational")[4] == "3/2");
  c0l_result_free(res);
  CHECK(std::string(c0l_last_error()).empty());
}

TEST_CASE("c0l_run error paths") {
  c0l_result* res = nullptr;
  CHECK(c0l_run("nope", kDriftConfig, &res) == 1);
  CHECK(res == nullptr);
  CHECK(std::string(c0l_last_error()).find("subcommand") != std::string::npos);

  CHECK(c0l_run("drift", "{not json", &res) == 1);
  CHECK(std::string(c0l_last_error()).find("parse") != std::string::npos);

  CHECK(c0l_run("drift", R"({"group": {"kind": "lattice", "rank": 1}})", &res) == 1);
  CHECK(!std::string(c0l_last_error()).empty());

  CHECK(c0l_run(nullptr, kDriftConfig, &res) == 1);
  CHECK(c0l_run("drift", nullptr, &res) == 1);

  // a successful call clears the sticky message
  CHECK(c0l_run("drift", kDriftConfig, &res) == 0);
  CHECK(std::string(c0l_last_error()).empty());
  c0l_result_free(res);
}

TEST_CASE("c0l_run works without an out handle") {
  CHECK(c0l_run("space-check",
                R"({"triples": 50, "spaces": [{"kind": "euclidean", "dim": 2}]})",
                nullptr) == 0);
}

TEST_CASE("c0l_version") {
  CHECK(std::strstr(c0l_version(), "cat0lab") != nullptr);
}

TEST_CASE("null handle accessors are safe") {
  CHECK(std::string(c0l_result_json(nullptr)).empty());
  CHECK(c0l_result_exit_code(nullptr) == 1);
  c0l_result_free(nullptr);
}
