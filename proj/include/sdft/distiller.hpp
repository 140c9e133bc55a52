#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdft/dataset.hpp"
#include "sdft/inference_client.hpp"
#include "sdft/templates.hpp"

namespace sdft {

enum class Validator { math_answer, none };

std::string to_string(Validator v);

/// Exact rational value of an extracted numeric answer. Decimals are parsed
/// exactly (e.g. "1.50" -> 3/2) so comparisons carry no floating-point slack.
struct Rational {
  int64_t num = 0;
  int64_t den = 1;

  void normalize();
  bool operator==(const Rational& other) const { return num == other.num && den == other.den; }
};

/// One example's distillation outcome. `selected` is always byte-equal to
/// either `distilled` or the original response.
struct DistillationRecord {
  TaskExample example;
  std::optional<std::string> distilled;
  std::string selected;
  bool used_distilled = false;
  Validator validator = Validator::none;
  std::string prompt;  // rendered distillation prompt, kept for audit
};

struct DistillationReport {
  size_t total = 0;
  size_t accepted = 0;   // distilled response passed selection
  size_t rejected = 0;   // generated but failed selection
  size_t failed = 0;     // generation failure or empty output
  double acceptance_rate = 0.0;
  std::map<std::string, double> acceptance_rate_by_task;
  double mix_ratio = 0.0;
  size_t blended_distilled = 0;  // rows carrying the distilled response after blending
};

struct DistillationOutput {
  Dataset dataset;
  DistillationReport report;
  std::vector<DistillationRecord> records;
};

/// Scans for the last case-insensitive "the answer is" and parses the
/// following number after stripping $ , * _ and a trailing period. Falls back
/// to the last standalone number on the final line. Absent when nothing parses.
std::optional<Rational> extract_math_answer(const std::string& text);

/// Conditional selection: the distilled text is kept only when the validator
/// admits it, otherwise the original response wins.
std::pair<std::string, bool> select(const std::optional<std::string>& distilled,
                                    const std::string& original, Validator validator);

Validator validator_for(const std::optional<TaskTag>& task);

/// Renders the distillation prompt for one example (instruction plus optional
/// input, and the original response as reference answer).
std::string render_distill_prompt(const TaskExample& example, const TemplateSpec& tmpl);

DistillationRecord distill_one(const TaskExample& example, const TemplateSpec& tmpl,
                               const InferenceClient& client, const GenerationRequest& defaults);

/// Blends distilled and original targets: round(mix_ratio * |eligible|) of the
/// accepted records carry their distilled text, chosen as a prefix of one
/// seeded permutation so the chosen sets nest across ratios.
Dataset blend(const std::vector<DistillationRecord>& records, double mix_ratio, uint64_t seed);

/// Indices (into `records`) of the rows that carry distilled text at this ratio.
std::vector<size_t> blend_chosen(const std::vector<DistillationRecord>& records, double mix_ratio,
                                 uint64_t seed);

using ValidatorResolver = std::function<Validator(const TaskExample&)>;

/// Default resolver: math-tagged examples get the math_answer validator,
/// everything else the accepting one.
Validator default_validator_resolver(const TaskExample& example);

DistillationOutput distill_dataset(const Dataset& dataset, const TemplateSpec& tmpl,
                                   const InferenceClient& client,
                                   const GenerationRequest& defaults, double mix_ratio,
                                   uint64_t seed,
                                   const ValidatorResolver& resolver = default_validator_resolver);

/// Audit JSONL, one record per line.
std::string emit_audit_jsonl(const std::vector<DistillationRecord>& records);

std::string emit_report_json(const DistillationReport& report);

}  // namespace sdft
