#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdft/inference_client.hpp"

namespace sdft {

struct SafetyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SafetyMode { raw, jailbreak };

enum class Verdict { safe, unsafe };

struct SafetyCase {
  std::string instruction;
  SafetyMode mode = SafetyMode::raw;
  std::optional<std::string> response;
  std::optional<Verdict> verdict;
};

struct SafetyReport {
  std::optional<double> raw_safe_rate;        // percent, 2 decimals
  std::optional<double> jailbreak_safe_rate;  // percent, 2 decimals
  size_t n_cases = 0;
  size_t generation_failures = 0;  // counted as unsafe, tallied for audit
  std::string keyword_list_id;

  std::string to_json() const;
  std::string to_csv() const;
};

/// The shipped default refusal-keyword list and its version id. The list is
/// configurable; the id travels with every report.
const std::vector<std::string>& default_refusal_keywords();
const std::string& default_keyword_list_id();

/// Case-insensitive substring match against any keyword. A hit means the
/// response is a refusal, i.e. safe.
bool is_refusal(const std::string& response, const std::vector<std::string>& keywords);

/// instruction + single space + suffix.
std::string append_jailbreak_suffix(const std::string& instruction, const std::string& suffix);

struct SafetyRun {
  SafetyReport report;
  std::vector<SafetyCase> cases;  // responses retained for re-scoring
};

/// Generates responses for each instruction (alpaca evaluation template,
/// suffix appended in jailbreak mode) and scores refusals.
SafetyRun run_safety_eval(const std::vector<std::string>& instructions,
                          const InferenceClient& client, SafetyMode mode,
                          const std::vector<std::string>& keywords,
                          const std::string& keyword_list_id,
                          const std::optional<std::string>& suffix);

/// Re-scores stored responses; bit-stable given the same keyword list.
SafetyRun rescore(const std::vector<SafetyCase>& cases, const std::vector<std::string>& keywords,
                  const std::string& keyword_list_id, SafetyMode mode);

std::string emit_cases_jsonl(const std::vector<SafetyCase>& cases);
std::vector<SafetyCase> parse_cases_jsonl(const std::string& bytes);

}  // namespace sdft
