#include "cat0lab/cat0lab.h"

#include <exception>
#include <string>

#include "cat0lab/errors.hpp"
#include "cat0lab/experiments.hpp"

struct c0l_result {
  std::string json;
  int exit_code = 0;
};

namespace {
thread_local std::string g_last_error;
}

extern "C" {

int c0l_run(const char* subcommand, const char* config_json, c0l_result** out) {
  g_last_error.clear();
  if (out) *out = nullptr;
  if (!subcommand || !config_json) {
    g_last_error = "null argument";
    return 1;
  }
  try {
    nlohmann::json config = nlohmann::json::parse(config_json);
    cat0lab::RunRecord rec = cat0lab::run_experiment(subcommand, config);
    if (out) {
      auto* r = new c0l_result;
      r->json = rec.to_json().dump(2);
      r->exit_code = rec.exit_code;
      *out = r;
    }
    return rec.exit_code;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("config parse: ") + e.what();
  } catch (const cat0lab::Error& e) {
    g_last_error = e.what();
  } catch (const std::exception& e) {
    g_last_error = e.what();
  }
  return 1;
}

const char* c0l_result_json(const c0l_result* r) {
  return r ? r->json.c_str() : "";
}

int c0l_result_exit_code(const c0l_result* r) { return r ? r->exit_code : 1; }

void c0l_result_free(c0l_result* r) { delete r; }

const char* c0l_last_error(void) { return g_last_error.c_str(); }

const char* c0l_version(void) { return cat0lab::kVersion; }

}  // extern "C"
