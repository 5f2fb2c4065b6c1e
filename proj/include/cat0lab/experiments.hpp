#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace cat0lab {

/// Machine-readable result of one experiment run. `payload` depends only on
/// the config (and seeds): identical configs reproduce it bit-for-bit in
/// exact mode. `timestamp` lives outside the payload for that reason.
struct RunRecord {
  std::string subcommand;
  std::string config_hash;  // FNV-1a of the canonical config dump
  std::string version;
  std::string timestamp;    // UTC, ISO 8601
  nlohmann::json config;    // echoed, post flag-merge
  nlohmann::json payload;
  std::vector<std::string> warnings;
  /// 0 complete/PASS, 2 a checked inequality failed.
  int exit_code = 0;

  nlohmann::json to_json() const;
};

extern const char* kVersion;

/// Dispatch by subcommand name (drift, conv-comb, fixed-point, shalom,
/// grigorchuk-audit, space-check). SchemaError on unknown subcommand or
/// malformed config. When config has "out_dir", writes record.json (and a
/// drift.csv for series-producing commands) into it.
RunRecord run_experiment(const std::string& subcommand,
                         const nlohmann::json& config);

RunRecord cmd_drift(const nlohmann::json& config);
RunRecord cmd_conv_comb(const nlohmann::json& config);
RunRecord cmd_fixed_point(const nlohmann::json& config);
RunRecord cmd_shalom(const nlohmann::json& config);
RunRecord cmd_grigorchuk_audit(const nlohmann::json& config);
RunRecord cmd_space_check(const nlohmann::json& config);

/// Cache directory: config["cache_dir"] if present, else $CAT0LAB_CACHE_DIR,
/// else empty (no cache).
std::string resolve_cache_dir(const nlohmann::json& config);

}  // namespace cat0lab
