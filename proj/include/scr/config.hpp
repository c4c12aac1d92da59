#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scr/loss.hpp"

namespace scr {

enum class Mode { scr, scr_m };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

// Every hyperparameter of a training run. Built-in defaults depend on the
// mode; use TrainConfig::defaults rather than value-initialization when the
// mode matters.
struct TrainConfig {
  Mode mode = Mode::scr;
  double lambda = 0.5;             // consistency weight
  std::size_t views = 2;           // dropout views per node (S)
  double temperature = 0.5;        // sharpening temperature (T)
  double eta_start = 0.85;         // confidence threshold, first epoch
  double eta_end = 0.85;           // confidence threshold, last epoch
  std::size_t beta = 20;           // confident-set refresh period, epochs
  double alpha = 0.999;            // EMA decay, scr_m only
  std::optional<std::size_t> tau;  // warmup epochs, scr_m only; unset = 15% of epochs
  std::size_t batch_labeled = 2;   // N_L
  std::size_t batch_unlabeled = 64;  // N_U
  std::size_t epochs = 200;        // N_t
  DistanceKind dist = DistanceKind::mse;
  double lr = 0.003;
  double dropout = 0.5;
  std::vector<std::size_t> hidden{64};
  std::size_t hops = 2;
  std::uint64_t seed = 0;

  static TrainConfig defaults(Mode mode);

  // Throws ConfigError on any invariant violation.
  void validate() const;

  // Resolved warmup length: 0 in scr mode, tau (or its default) in scr_m.
  std::size_t warmup_epochs() const;
};

using ConfigMap = std::map<std::string, std::string>;

// Names accepted in config files and as --key overrides.
const std::vector<std::string>& config_keys();

// Parses flat `key = value` text. '#' starts a comment. Throws ConfigError
// with the line number on malformed lines, unknown keys or duplicates.
ConfigMap parse_config_text(std::string_view text);

void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);

// Picks the mode (overrides > file > scr), starts from that mode's defaults,
// applies file values then overrides, and validates.
TrainConfig resolve_config(const ConfigMap& file, const ConfigMap& overrides);

// Fully resolved `key = value` text, keys sorted; parse_config_text inverts it.
std::string format_config(const TrainConfig& config);

}  // namespace scr
