// cat0lab CLI: thin wrapper over the shared library's C surface.
// Exit codes: 0 PASS/complete, 2 inequality violation, 1 error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cat0lab/cat0lab.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool exact = false;
  bool monte_carlo = false;
  std::optional<int> samples;
  std::optional<double> tol;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "RNG seed (overrides config)");
  sub->add_option("--out", f.out_dir, "output directory for record.json/CSV");
  auto* ex = sub->add_flag("--exact", f.exact, "exact arithmetic mode");
  sub->add_flag("--monte-carlo", f.monte_carlo, "Monte Carlo mode")
      ->excludes(ex);
  sub->add_option("--samples", f.samples, "Monte Carlo sample count");
  sub->add_option("--tol", f.tol, "tolerance (overrides config)");
}

int run(const std::string& name, const CommonFlags& f) {
  std::ifstream in(f.config_path);
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "error: cannot parse " << f.config_path << ": " << e.what()
              << "\n";
    return 1;
  }
  if (f.seed) config["seed"] = *f.seed;
  if (f.out_dir) config["out_dir"] = *f.out_dir;
  if (f.exact) {
    config["mode"] = "exact";
    config.erase("samples");
  }
  if (f.monte_carlo) config["mode"] = "monte_carlo";
  if (f.samples) config["samples"] = *f.samples;
  if (f.tol) config["tol"] = *f.tol;

  c0l_result* res = nullptr;
  int code = c0l_run(name.c_str(), config.dump().c_str(), &res);
  if (code == 1) {
    std::cerr << "error: " << c0l_last_error() << "\n";
    return 1;
  }
  std::cout << c0l_result_json(res) << "\n";
  c0l_result_free(res);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cat0lab experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(c0l_version()));

  const char* names[] = {"drift",  "conv-comb",        "fixed-point",
                         "shalom", "grigorchuk-audit", "space-check"};
  const char* descs[] = {
      "random-walk drift table",
      "convex-combination drift inequality",
      "fixed-point pipeline for an isometric action",
      "Shalom dichotomy search",
      "Grigorchuk torsion audit over a word-metric ball",
      "CAT(0) metric/CN conformance check"};
  CommonFlags flags[6];
  for (int i = 0; i < 6; ++i)
    add_common(app.add_subcommand(names[i], descs[i]), flags[i]);

  CLI11_PARSE(app, argc, argv);
  for (int i = 0; i < 6; ++i)
    if (app.get_subcommand(names[i])->parsed()) return run(names[i], flags[i]);
  return 1;
}
