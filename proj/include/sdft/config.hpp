#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "sdft/inference_client.hpp"

namespace sdft {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
  BackendConfig backend;
  std::string template_name = "using";
  std::optional<std::string> template_file;  // custom template, overrides template_name
  std::map<std::string, std::string> validator_overrides;  // task tag -> validator name
  double mix_ratio = 1.0;
  uint64_t seed = 0;
  std::optional<size_t> sample_n;
  int max_tokens = 1024;
  double temperature = 0.0;

  std::string input_path;
  std::string output_path = "distilled.jsonl";
  std::string audit_path = "audit.jsonl";
  std::string report_path = "report.json";
  std::string keyword_file;                  // empty -> shipped default list
  std::optional<std::string> jailbreak_suffix;

  /// Fails on any out-of-range value before side effects happen.
  void validate() const;

  /// Canonical key=value form; hashing this pins the run manifest.
  std::string canonical() const;
};

/// Parses a key = value config file (strings optionally double-quoted,
/// # comments). Unknown keys are an error.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Applies one `key=value` override on top of an existing config.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

/// FNV-1a 64 over the canonical form, hex-encoded.
std::string config_hash(const RunConfig& config);

/// Run manifest: config hash, seed, template, backend model, tool version.
std::string manifest_json(const RunConfig& config);

std::string default_config_text();

}  // namespace sdft
