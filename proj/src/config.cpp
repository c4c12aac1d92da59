#include "scr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "scr/errors.hpp"

namespace scr {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError("config '" + key + "': expected a number, got '" + value + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config '" + key + "': expected a non-negative integer, got '" + value +
                      "'");
  }
  return out;
}

std::vector<std::size_t> parse_dims(const std::string& key, const std::string& value) {
  std::vector<std::size_t> dims;
  if (trim(value).empty() || trim(value) == "none") return dims;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto width = parse_uint(key, std::string(trim(item)));
    if (width == 0) throw ConfigError("config '" + key + "': zero-width hidden layer");
    dims.push_back(width);
  }
  return dims;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Mode parse_mode(std::string_view name) {
  if (name == "scr") return Mode::scr;
  if (name == "scr_m" || name == "scr-m") return Mode::scr_m;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected scr or scr_m)");
}

std::string_view to_string(Mode mode) { return mode == Mode::scr ? "scr" : "scr_m"; }

TrainConfig TrainConfig::defaults(Mode mode) {
  TrainConfig c;
  c.mode = mode;
  if (mode == Mode::scr_m) {
    c.lambda = 0.2;
    c.dist = DistanceKind::kl;
    c.views = 1;
    c.eta_start = 0.9;
    c.eta_end = 0.8;
    c.alpha = 0.999;
  }
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (views < 1) fail("views must be >= 1");
  if (!(temperature > 0.0 && temperature <= 1.0)) fail("temperature must be in (0, 1]");
  if (!(eta_start >= 0.0 && eta_start <= 1.0)) fail("eta_start must be in [0, 1]");
  if (!(eta_end >= 0.0 && eta_end <= 1.0)) fail("eta_end must be in [0, 1]");
  if (eta_end > eta_start) fail("eta_end must not exceed eta_start");
  if (beta < 1) fail("beta must be >= 1");
  if (batch_labeled < 1) fail("batch_labeled must be >= 1");
  if (!(lr > 0.0)) fail("lr must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (mode == Mode::scr_m && !(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must be in [0, 1]");
}

std::size_t TrainConfig::warmup_epochs() const {
  if (mode != Mode::scr_m) return 0;
  if (tau) return *tau;
  return static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(epochs)));
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "alpha", "batch_labeled", "batch_unlabeled", "beta",  "dist",   "dropout",
      "epochs", "eta_end",      "eta_start",       "hidden", "hops",  "lambda",
      "lr",     "mode",         "seed",            "tau",    "temperature", "views"};
  return keys;
}

ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(where + "unknown key '" + key + "'");
    }
    if (!out.emplace(key, value).second) throw ConfigError(where + "duplicate key '" + key + "'");
  }
  return out;
}

void apply_setting(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "mode") c.mode = parse_mode(value);
  else if (key == "lambda") c.lambda = parse_double(key, value);
  else if (key == "views") c.views = parse_uint(key, value);
  else if (key == "temperature") c.temperature = parse_double(key, value);
  else if (key == "eta_start") c.eta_start = parse_double(key, value);
  else if (key == "eta_end") c.eta_end = parse_double(key, value);
  else if (key == "beta") c.beta = parse_uint(key, value);
  else if (key == "alpha") c.alpha = parse_double(key, value);
  else if (key == "tau") c.tau = value == "auto" ? std::nullopt : std::optional(parse_uint(key, value));
  else if (key == "batch_labeled") c.batch_labeled = parse_uint(key, value);
  else if (key == "batch_unlabeled") c.batch_unlabeled = parse_uint(key, value);
  else if (key == "epochs") c.epochs = parse_uint(key, value);
  else if (key == "dist") c.dist = parse_distance(value);
  else if (key == "lr") c.lr = parse_double(key, value);
  else if (key == "dropout") c.dropout = parse_double(key, value);
  else if (key == "hidden") c.hidden = parse_dims(key, value);
  else if (key == "hops") c.hops = parse_uint(key, value);
  else if (key == "seed") c.seed = parse_uint(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig resolve_config(const ConfigMap& file, const ConfigMap& overrides) {
  Mode mode = Mode::scr;
  if (auto it = file.find("mode"); it != file.end()) mode = parse_mode(it->second);
  if (auto it = overrides.find("mode"); it != overrides.end()) mode = parse_mode(it->second);
  TrainConfig config = TrainConfig::defaults(mode);
  for (const auto& [key, value] : file) apply_setting(config, key, value);
  for (const auto& [key, value] : overrides) apply_setting(config, key, value);
  config.mode = mode;
  config.validate();
  return config;
}

std::string format_config(const TrainConfig& c) {
  std::string hidden;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    hidden += (i ? "," : "") + std::to_string(c.hidden[i]);
  }
  if (hidden.empty()) hidden = "none";
  const ConfigMap values{
      {"alpha", format_double(c.alpha)},
      {"batch_labeled", std::to_string(c.batch_labeled)},
      {"batch_unlabeled", std::to_string(c.batch_unlabeled)},
      {"beta", std::to_string(c.beta)},
      {"dist", std::string(to_string(c.dist))},
      {"dropout", format_double(c.dropout)},
      {"epochs", std::to_string(c.epochs)},
      {"eta_end", format_double(c.eta_end)},
      {"eta_start", format_double(c.eta_start)},
      {"hidden", hidden},
      {"hops", std::to_string(c.hops)},
      {"lambda", format_double(c.lambda)},
      {"lr", format_double(c.lr)},
      {"mode", std::string(to_string(c.mode))},
      {"seed", std::to_string(c.seed)},
      {"tau", std::to_string(c.warmup_epochs())},
      {"temperature", format_double(c.temperature)},
      {"views", std::to_string(c.views)},
  };
  std::string out;
  for (const auto& [key, value] : values) out += key + " = " + value + "\n";
  return out;
}

}  // namespace scr
