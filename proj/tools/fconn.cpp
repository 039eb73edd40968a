// Rolling-window connectedness estimation driver.
#include "fconn/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  if (const char* level = std::getenv("FCONN_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Factor-model connectedness over rolling windows"};
  app.set_version_flag("--version", fconn::kVersion);
  std::string config_path, input, out, windows, seed, threads;
  bool no_bootstrap = false;
  app.add_option("--config", config_path, "JSON configuration or a previous run manifest");
  app.add_option("--input", input, "Long-form input CSV (overrides input.path)");
  app.add_option("--out", out, "Output directory (overrides output.dir)");
  app.add_option("--windows", windows, "Number of windows to process, or 'all'");
  app.add_flag("--no-bootstrap", no_bootstrap, "Skip bootstrap bands");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
  CLI11_PARSE(app, argc, argv);

  nlohmann::json doc = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "config: cannot open " << config_path << '\n';
      return fconn::kExitConfig;
    }
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "config: " << e.what() << '\n';
      return fconn::kExitConfig;
    }
    if (doc.is_object() && doc.contains("config") && doc.contains("version")) doc = doc["config"];
  }

  std::vector<std::string> flag_errors;
  auto as_integer = [&](const std::string& text, const char* flag) -> nlohmann::json {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    flag_errors.push_back(std::string(flag) + ": expected an integer, got '" + text + "'");
    return nullptr;
  };
  if (doc.is_object()) {
    if (!input.empty()) doc["input"]["path"] = input;
    if (!out.empty()) doc["output"]["dir"] = out;
    if (!windows.empty()) doc["window"]["max_windows"] = windows == "all" ? nlohmann::json("all") : as_integer(windows, "--windows");
    if (no_bootstrap) doc["bootstrap"]["enabled"] = false;
    if (!seed.empty()) doc["seed"] = as_integer(seed, "--seed");
    if (!threads.empty()) doc["threads"] = as_integer(threads, "--threads");
  }

  auto result = fconn::validate_config(doc);
  result.errors.insert(result.errors.begin(), flag_errors.begin(), flag_errors.end());
  if (!result.errors.empty() || !result.config) {
    for (const auto& e : result.errors) std::cerr << "config error: " << e << '\n';
    return fconn::kExitConfig;
  }
  return fconn::run(*result.config, result.effective);
}
