#pragma once

#include "fconn/bootstrap.hpp"
#include "fconn/factor.hpp"
#include "fconn/ingest.hpp"
#include "fconn/pipeline.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fconn {

inline constexpr const char* kVersion = "0.1.0";

enum class OrderMode { Fixed, IcSelect };

struct RunConfig {
  std::string input_path;
  InputKind input_kind = InputKind::Values;
  VolatilityTransform transform = VolatilityTransform::Raw;
  RollingWindowSpec window;
  std::optional<int> max_windows;  // unset: all windows

  OrderMode order_mode = OrderMode::Fixed;
  ModelOrder order{1, 2, 4};
  OrderBounds bounds;

  EstimationConfig estimation;
  bool bootstrap_enabled = true;
  BootstrapConfig bootstrap;

  std::string output_dir = "out";
  bool write_pairwise = true;
  std::uint64_t seed = 20240101;
  unsigned threads = 1;
};

struct ConfigResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;  // "field.path: message"
  nlohmann::json effective;         // input document with every default filled in
};

// Validates a configuration document. A run manifest is accepted too: its
// "config" member is used. Every problem is reported, each prefixed by the
// path of the offending field.
ConfigResult validate_config(const nlohmann::json& doc);

// The default document, i.e. what validate_config fills in.
nlohmann::json default_config_document();

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitAllFailed = 2 };

// Rolling-window estimation driver. Writes swc.csv, spectral.csv, bands.csv,
// pairwise/<end_date>.csv and manifest.json into the output directory.
// `effective` is the validated document echoed into the manifest.
int run(const RunConfig& cfg, const nlohmann::json& effective);

}  // namespace fconn
