#include "fconn/cli.hpp"

#include "fconn/csv.hpp"
#include "fconn/parallel.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace fconn {

using nlohmann::json;
namespace fs = std::filesystem;

json default_config_document() {
  return {
      {"input", {{"path", nullptr}, {"kind", "values"}, {"transform", "raw"}}},
      {"window", {{"length", 150}, {"step", 1}, {"max_windows", "all"}}},
      {"horizon", 10},
      {"order", {{"mode", "fixed"}, {"r", 1}, {"p_f", 2}, {"p_xi", 4}, {"r_max", 5}, {"pf_max", 4}, {"pxi_max", 6}}},
      {"lasso",
       {{"lambda_grid", json::array()},
        {"grid_size", 50},
        {"grid_ratio", 1e-3},
        {"tau", 1.0},
        {"max_iter", 10000},
        {"tol", 1e-7},
        {"shared_lambda", false}}},
      {"precision",
       {{"rho_grid", json::array()}, {"grid_size", 10}, {"grid_ratio", 0.05}, {"regularized_time_domain", false}}},
      {"spectral",
       {{"enabled", true},
        {"bands",
         {{{"name", "monthly"}, {"min_period", 2}, {"max_period", 20}},
          {{"name", "quarterly"}, {"min_period", 20}, {"max_period", 60}},
          {{"name", "yearly"}, {"min_period", 60}, {"max_period", nullptr}}}},
        {"grid_size", 512},
        {"kernel", "bartlett"},
        {"bandwidth", 0},
        {"ma_terms", 100},
        {"threshold", 0.0},
        {"threshold_exponent", 1.0}}},
      {"bootstrap", {{"enabled", true}, {"replications", 499}, {"burn_in", 200}, {"confidence", 0.95}}},
      {"output", {{"dir", "out"}, {"pairwise", true}}},
      {"seed", 20240101},
      {"threads", 1},
  };
}

namespace {

// Walks a document against the default layout, filling in omitted fields and
// collecting one message per problem.
class Checker {
 public:
  explicit Checker(std::vector<std::string>& errors) : errors_(errors) {}

  void fail(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

  // Merges defaults into `node`, reporting unknown keys. Returns false when
  // `node` is not an object.
  bool section(json& node, const json& defaults, const std::string& path) {
    if (node.is_null()) node = json::object();
    if (!node.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : node.items()) {
      if (!defaults.contains(key)) fail(join(path, key), "unknown field");
    }
    for (const auto& [key, value] : defaults.items()) {
      if (!node.contains(key)) node[key] = value;
    }
    return true;
  }

  std::optional<long long> integer(const json& v, const std::string& path, long long lo, long long hi) {
    if (!v.is_number_integer()) {
      fail(path, "expected an integer");
      return std::nullopt;
    }
    if (v.is_number_unsigned() && v.get<unsigned long long>() > static_cast<unsigned long long>(hi)) {
      fail(path, "must be at most " + std::to_string(hi));
      return std::nullopt;
    }
    const auto x = v.get<long long>();
    if (x < lo || x > hi) {
      fail(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return std::nullopt;
    }
    return x;
  }

  // `lo_open`/`hi_open` select open ends of the admissible interval.
  std::optional<double> number(const json& v, const std::string& path, double lo, double hi, bool lo_open = false,
                               bool hi_open = false) {
    if (!v.is_number()) {
      fail(path, "expected a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    const bool ok = std::isfinite(x) && (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    if (!ok) {
      std::ostringstream msg;
      msg << "must lie in " << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]");
      fail(path, msg.str());
      return std::nullopt;
    }
    return x;
  }

  std::optional<bool> boolean(const json& v, const std::string& path) {
    if (!v.is_boolean()) {
      fail(path, "expected true or false");
      return std::nullopt;
    }
    return v.get<bool>();
  }

  std::optional<std::string> choice(const json& v, const std::string& path, const std::vector<std::string>& options) {
    std::string joined;
    for (const auto& o : options) joined += (joined.empty() ? "" : ", ") + o;
    if (!v.is_string() || std::find(options.begin(), options.end(), v.get<std::string>()) == options.end()) {
      fail(path, "expected one of: " + joined);
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> positive_list(const json& v, const std::string& path) {
    if (!v.is_array()) {
      fail(path, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
      auto x = number(v[k], path + "[" + std::to_string(k) + "]", 0.0, std::numeric_limits<double>::max());
      if (!x) return std::nullopt;
      out.push_back(*x);
    }
    return out;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<std::string>& errors_;
};

std::optional<FrequencyBand> parse_band(Checker& ck, json& node, const std::string& path) {
  if (!node.is_object()) {
    ck.fail(path, "expected an object");
    return std::nullopt;
  }
  static const std::set<std::string> known{"name", "lo", "hi", "min_period", "max_period"};
  for (const auto& [key, value] : node.items()) {
    if (!known.count(key)) ck.fail(path + "." + key, "unknown field");
  }
  FrequencyBand band;
  if (!node.contains("name") || !node["name"].is_string() || node["name"].get<std::string>().empty()) {
    ck.fail(path + ".name", "expected a non-empty string");
    return std::nullopt;
  }
  band.name = node["name"].get<std::string>();
  const bool radians = node.contains("lo") || node.contains("hi");
  const bool periods = node.contains("min_period") || node.contains("max_period");
  if (radians == periods) {
    ck.fail(path, "give either lo/hi (radians) or min_period/max_period (observations)");
    return std::nullopt;
  }
  if (radians) {
    if (!node.contains("lo") || !node.contains("hi")) {
      ck.fail(path, "both lo and hi are required");
      return std::nullopt;
    }
    auto lo = ck.number(node["lo"], path + ".lo", 0.0, kPi);
    auto hi = ck.number(node["hi"], path + ".hi", 0.0, kPi);
    if (!lo || !hi) return std::nullopt;
    band.lo = *lo;
    band.hi = *hi;
  } else {
    if (!node.contains("min_period")) {
      ck.fail(path + ".min_period", "required");
      return std::nullopt;
    }
    if (!node.contains("max_period")) node["max_period"] = nullptr;
    auto pmin = ck.number(node["min_period"], path + ".min_period", 2.0, std::numeric_limits<double>::max());
    if (!pmin) return std::nullopt;
    band.hi = 2.0 * kPi / *pmin;
    band.lo = 0.0;
    if (!node["max_period"].is_null()) {
      auto pmax = ck.number(node["max_period"], path + ".max_period", 2.0, std::numeric_limits<double>::max());
      if (!pmax) return std::nullopt;
      band.lo = 2.0 * kPi / *pmax;
    }
  }
  if (!(band.lo < band.hi)) {
    ck.fail(path, "empty frequency range");
    return std::nullopt;
  }
  return band;
}

}  // namespace

ConfigResult validate_config(const json& input) {
  ConfigResult res;
  Checker ck(res.errors);
  json doc = input;
  if (doc.is_object() && doc.contains("config") && doc.contains("version")) doc = doc["config"];
  const json defaults = default_config_document();
  if (!ck.section(doc, defaults, "")) return res;

  RunConfig cfg;

  // input
  if (auto& in = doc["input"]; ck.section(in, defaults["input"], "input")) {
    if (in["path"].is_null()) {
      ck.fail("input.path", "required");
    } else if (!in["path"].is_string()) {
      ck.fail("input.path", "expected a string");
    } else {
      cfg.input_path = in["path"].get<std::string>();
      std::error_code ec;
      if (!fs::is_regular_file(cfg.input_path, ec)) ck.fail("input.path", "file not found: " + cfg.input_path);
    }
    if (auto k = ck.choice(in["kind"], "input.kind", {"values", "ohlc"})) {
      cfg.input_kind = *k == "ohlc" ? InputKind::Ohlc : InputKind::Values;
    }
    if (auto t = ck.choice(in["transform"], "input.transform", {"raw", "log"})) {
      cfg.transform = *t == "log" ? VolatilityTransform::Log : VolatilityTransform::Raw;
    }
  }

  // window
  if (auto& w = doc["window"]; ck.section(w, defaults["window"], "window")) {
    if (auto v = ck.integer(w["length"], "window.length", 1, 1'000'000)) cfg.window.window_length = static_cast<int>(*v);
    if (auto v = ck.integer(w["step"], "window.step", 1, 1'000'000)) cfg.window.step = static_cast<int>(*v);
    if (!(w["max_windows"].is_string() && w["max_windows"] == "all")) {
      if (auto v = ck.integer(w["max_windows"], "window.max_windows", 1, 1'000'000'000)) {
        cfg.max_windows = static_cast<int>(*v);
      }
    }
  }

  if (auto v = ck.integer(doc["horizon"], "horizon", 1, 10'000)) cfg.estimation.horizon = static_cast<int>(*v);

  // order
  if (auto& o = doc["order"]; ck.section(o, defaults["order"], "order")) {
    if (auto m = ck.choice(o["mode"], "order.mode", {"fixed", "ic-select"})) {
      cfg.order_mode = *m == "fixed" ? OrderMode::Fixed : OrderMode::IcSelect;
    }
    auto get = [&](const char* key, int& target) {
      if (auto v = ck.integer(o[key], std::string("order.") + key, 1, 1000)) target = static_cast<int>(*v);
    };
    get("r", cfg.order.r);
    get("p_f", cfg.order.p_f);
    get("p_xi", cfg.order.p_xi);
    get("r_max", cfg.bounds.r_max);
    get("pf_max", cfg.bounds.pf_max);
    get("pxi_max", cfg.bounds.pxi_max);
  }

  // lasso
  if (auto& l = doc["lasso"]; ck.section(l, defaults["lasso"], "lasso")) {
    auto& lc = cfg.estimation.lasso;
    if (auto g = ck.positive_list(l["lambda_grid"], "lasso.lambda_grid")) lc.lambda_grid = *g;
    if (auto v = ck.integer(l["grid_size"], "lasso.grid_size", 2, 10'000)) lc.grid_size = static_cast<int>(*v);
    if (auto v = ck.number(l["grid_ratio"], "lasso.grid_ratio", 0.0, 1.0, true, true)) lc.grid_ratio = *v;
    if (auto v = ck.number(l["tau"], "lasso.tau", 0.0, 100.0, true)) lc.tau = *v;
    if (auto v = ck.integer(l["max_iter"], "lasso.max_iter", 1, 100'000'000)) lc.max_iter = static_cast<int>(*v);
    if (auto v = ck.number(l["tol"], "lasso.tol", 0.0, 1.0, true)) lc.tol = *v;
    if (auto v = ck.boolean(l["shared_lambda"], "lasso.shared_lambda")) lc.shared_lambda = *v;
  }

  // precision
  if (auto& p = doc["precision"]; ck.section(p, defaults["precision"], "precision")) {
    auto& pc = cfg.estimation.precision;
    if (auto g = ck.positive_list(p["rho_grid"], "precision.rho_grid")) pc.rho_grid = *g;
    if (auto v = ck.integer(p["grid_size"], "precision.grid_size", 1, 10'000)) pc.grid_size = static_cast<int>(*v);
    if (auto v = ck.number(p["grid_ratio"], "precision.grid_ratio", 0.0, 1.0, true)) pc.grid_ratio = *v;
    if (auto v = ck.boolean(p["regularized_time_domain"], "precision.regularized_time_domain")) {
      cfg.estimation.regularized_time_domain = *v;
    }
  }

  // spectral
  if (auto& s = doc["spectral"]; ck.section(s, defaults["spectral"], "spectral")) {
    auto& sc = cfg.estimation.spectral;
    if (auto v = ck.boolean(s["enabled"], "spectral.enabled")) sc.enabled = *v;
    if (!s["bands"].is_array() || s["bands"].empty()) {
      ck.fail("spectral.bands", "expected a non-empty array of bands");
    } else {
      std::vector<FrequencyBand> bands;
      bool ok = true;
      std::set<std::string> names;
      for (std::size_t k = 0; k < s["bands"].size(); ++k) {
        const std::string path = "spectral.bands[" + std::to_string(k) + "]";
        auto b = parse_band(ck, s["bands"][k], path);
        if (!b) {
          ok = false;
          continue;
        }
        if (!names.insert(b->name).second) {
          ck.fail(path + ".name", "duplicate band name '" + b->name + "'");
          ok = false;
        }
        bands.push_back(*b);
      }
      if (ok) {
        try {
          validate_partition(bands);
          sc.bands = bands;
        } catch (const DomainError& e) {
          ck.fail("spectral.bands", e.what());
        }
      }
    }
    if (auto v = ck.integer(s["grid_size"], "spectral.grid_size", 8, 1'000'000)) sc.grid_size = static_cast<int>(*v);
    if (auto k = ck.choice(s["kernel"], "spectral.kernel", {"bartlett", "parzen"})) {
      sc.kernel = *k == "parzen" ? Kernel::Parzen : Kernel::Bartlett;
    }
    if (auto v = ck.number(s["bandwidth"], "spectral.bandwidth", 0.0, 1e9)) sc.bandwidth = *v;
    if (auto v = ck.integer(s["ma_terms"], "spectral.ma_terms", 1, 1'000'000)) sc.ma_terms = static_cast<int>(*v);
    if (auto v = ck.number(s["threshold"], "spectral.threshold", 0.0, 1e9)) sc.threshold = *v;
    if (s["threshold_exponent"].is_string() && s["threshold_exponent"] == "inf") {
      sc.threshold_exponent = std::numeric_limits<double>::infinity();
    } else if (auto v = ck.number(s["threshold_exponent"], "spectral.threshold_exponent", 1.0, 1e9)) {
      sc.threshold_exponent = *v;
    }
  }

  // bootstrap
  if (auto& b = doc["bootstrap"]; ck.section(b, defaults["bootstrap"], "bootstrap")) {
    if (auto v = ck.boolean(b["enabled"], "bootstrap.enabled")) cfg.bootstrap_enabled = *v;
    if (auto v = ck.integer(b["replications"], "bootstrap.replications", 2, 1'000'000)) {
      cfg.bootstrap.replications = static_cast<int>(*v);
    }
    if (auto v = ck.integer(b["burn_in"], "bootstrap.burn_in", 0, 1'000'000)) cfg.bootstrap.burn_in = static_cast<int>(*v);
    if (auto v = ck.number(b["confidence"], "bootstrap.confidence", 0.0, 1.0, true, true)) cfg.bootstrap.confidence = *v;
  }

  // output
  if (auto& o = doc["output"]; ck.section(o, defaults["output"], "output")) {
    if (!o["dir"].is_string() || o["dir"].get<std::string>().empty()) {
      ck.fail("output.dir", "expected a non-empty string");
    } else {
      cfg.output_dir = o["dir"].get<std::string>();
    }
    if (auto v = ck.boolean(o["pairwise"], "output.pairwise")) cfg.write_pairwise = *v;
  }

  if (auto v = ck.integer(doc["seed"], "seed", 0, std::numeric_limits<long long>::max())) {
    cfg.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = ck.integer(doc["threads"], "threads", 0, 1024)) cfg.threads = static_cast<unsigned>(*v);
  cfg.bootstrap.seed = cfg.seed;

  res.effective = doc;
  if (res.errors.empty()) res.config = std::move(cfg);
  return res;
}

namespace {

struct WindowOutcome {
  Date end_date;
  std::optional<WindowEstimate> estimate;
  std::vector<BandedMeasure> bands;
  int boot_used = 0;
  int boot_failures = 0;
  std::uint64_t seed = 0;
  std::string error;
};

std::string fmt(double x) { return csv::format_double(x); }

void write_outputs(const RunConfig& cfg, const json& effective, const Panel& panel,
                   const std::vector<WindowOutcome>& outcomes) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const auto& bands = cfg.estimation.spectral.bands;

  std::ofstream swc(dir / "swc.csv", std::ios::binary);
  csv::write_record(swc, {"end_date", "swc", "swc_mkt", "swc_ids"});
  for (const auto& w : outcomes) {
    if (w.estimate) {
      const auto& t = w.estimate->table;
      csv::write_record(swc, {w.end_date.iso(), fmt(t.swc), fmt(t.swc_mkt), fmt(t.swc_ids)});
    } else {
      csv::write_record(swc, {w.end_date.iso(), "", "", ""});
    }
  }

  if (cfg.estimation.spectral.enabled) {
    std::ofstream spec(dir / "spectral.csv", std::ios::binary);
    csv::write_record(spec, {"end_date", "band", "swc", "swc_mkt", "swc_ids"});
    for (const auto& w : outcomes) {
      if (w.estimate && w.estimate->spectral) {
        for (const auto& b : w.estimate->spectral->bands) {
          csv::write_record(spec, {w.end_date.iso(), b.name, fmt(b.swc), fmt(b.swc_mkt), fmt(b.swc_ids)});
        }
      } else {
        for (const auto& b : validate_partition(bands)) csv::write_record(spec, {w.end_date.iso(), b.name, "", "", ""});
      }
    }
  }

  if (cfg.bootstrap_enabled) {
    std::ofstream out(dir / "bands.csv", std::ios::binary);
    csv::write_record(out, {"end_date", "measure", "point", "lower", "upper"});
    for (const auto& w : outcomes) {
      for (const auto& b : w.bands) {
        csv::write_record(out, {w.end_date.iso(), b.measure, fmt(b.point), fmt(b.lower), fmt(b.upper)});
      }
    }
  }

  if (cfg.write_pairwise) {
    fs::create_directories(dir / "pairwise");
    for (const auto& w : outcomes) {
      if (!w.estimate) continue;
      std::ofstream out(dir / "pairwise" / (w.end_date.iso() + ".csv"), std::ios::binary);
      write_pairwise_csv(out, w.estimate->table, panel.names);
    }
  }

  json windows = json::array();
  int failed = 0;
  for (const auto& w : outcomes) {
    json entry{{"end_date", w.end_date.iso()}};
    if (w.estimate) {
      const auto& o = w.estimate->order;
      entry["status"] = "ok";
      entry["order"] = {{"r", o.r}, {"p_f", o.p_f}, {"p_xi", o.p_xi}};
      if (w.estimate->precision) entry["glasso_penalty"] = w.estimate->precision->penalty;
      if (cfg.bootstrap_enabled) {
        entry["bootstrap"] = {{"seed", w.seed}, {"replications_used", w.boot_used}, {"failures", w.boot_failures}};
      }
    } else {
      ++failed;
      entry["status"] = "failed";
      entry["reason"] = w.error;
    }
    windows.push_back(std::move(entry));
  }
  json band_defs = json::array();
  for (const auto& b : validate_partition(bands)) band_defs.push_back({{"name", b.name}, {"lo", b.lo}, {"hi", b.hi}});

  json manifest{{"version", kVersion},
                {"config", effective},
                {"seeds", {{"master", cfg.seed}, {"window_seed_rule", "seed_seq(master, window_index)"}}},
                {"panel",
                 {{"rows", panel.rows()},
                  {"series", panel.names},
                  {"first_date", panel.dates.front().iso()},
                  {"last_date", panel.dates.back().iso()}}},
                {"bands", band_defs},
                {"window_count", outcomes.size()},
                {"failed_windows", failed},
                {"windows", windows}};
  std::ofstream(dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
}

}  // namespace

int run(const RunConfig& cfg, const json& effective) {
  Panel panel;
  std::vector<Window> windows;
  try {
    panel = apply_transform(assemble_panel(read_long_csv_file(cfg.input_path, cfg.input_kind)), cfg.transform);
    windows = rolling_windows(panel, cfg.window);
  } catch (const Error& e) {
    spdlog::error("input: {}", e.what());
    return kExitConfig;
  }
  if (cfg.max_windows && static_cast<std::size_t>(*cfg.max_windows) < windows.size()) {
    windows.resize(static_cast<std::size_t>(*cfg.max_windows));
  }
  spdlog::info("panel {} x {}, {} windows", panel.rows(), panel.cols(), windows.size());

  std::vector<WindowOutcome> outcomes(windows.size());
  // Parallelise across windows when there are several; otherwise give the
  // threads to the bootstrap. Results are identical either way.
  const bool window_parallel = windows.size() > 1;
  BootstrapConfig boot = cfg.bootstrap;
  boot.threads = window_parallel ? 1u : cfg.threads;

  parallel_for(windows.size(), window_parallel ? cfg.threads : 1u, [&](std::size_t k) {
    auto& out = outcomes[k];
    const auto& win = windows[k];
    out.end_date = win.end_date;
    try {
      ModelOrder order = cfg.order;
      if (cfg.order_mode == OrderMode::IcSelect) {
        order = select_model_order(demean_columns(win.slice.values), cfg.bounds, cfg.estimation.lasso).best;
      }
      if (cfg.bootstrap_enabled) {
        BootstrapConfig wb = boot;
        wb.seed = replication_rng(cfg.seed, k)();
        out.seed = wb.seed;
        auto res = bootstrap_connectedness(win.slice.values, order, wb, cfg.estimation);
        out.estimate = std::move(res.estimate);
        out.bands = std::move(res.bands);
        out.boot_used = res.replications_used;
        out.boot_failures = res.failures;
      } else {
        out.estimate = estimate_window(win.slice.values, order, cfg.estimation);
      }
      spdlog::debug("window {} ({}): swc {}", k, win.end_date.iso(), out.estimate->table.swc);
    } catch (const Error& e) {
      out.estimate.reset();
      out.error = e.what();
      spdlog::warn("window ending {} failed: {}", win.end_date.iso(), e.what());
    }
  });

  try {
    write_outputs(cfg, effective, panel, outcomes);
  } catch (const std::exception& e) {
    spdlog::error("writing outputs: {}", e.what());
    return kExitAllFailed;
  }
  const bool any_ok = std::any_of(outcomes.begin(), outcomes.end(), [](const auto& w) { return w.estimate.has_value(); });
  if (!any_ok) {
    spdlog::error("every window failed estimation");
    return kExitAllFailed;
  }
  return kExitOk;
}

}  // namespace fconn
