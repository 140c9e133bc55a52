#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdft {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TaskTag { general, math, function_call, code };

std::string to_string(TaskTag tag);
std::optional<TaskTag> task_tag_from_string(const std::string& s);

/// One instruction-tuning record. `input` is optional extra context that is
/// concatenated into the prompt; `response` is the original target.
struct TaskExample {
  std::string instruction;
  std::optional<std::string> input;
  std::string response;
  std::optional<TaskTag> task;
  std::string id;

  bool operator==(const TaskExample&) const = default;
};

struct Dataset {
  std::vector<TaskExample> examples;
  std::optional<std::string> source_path;
  std::optional<uint64_t> seed;

  size_t size() const { return examples.size(); }
};

/// Parses line-delimited JSON. One object per non-empty line with at least
/// `instruction` and `response`; a missing `id` is synthesized from the
/// 0-based line index. Throws ParseError naming the offending line.
Dataset parse_jsonl(const std::string& bytes);

/// Emits one JSON object per line (keys: instruction, input?, response,
/// task?, id), LF line endings. parse_jsonl(emit_jsonl(d)) == d.
std::string emit_jsonl(const Dataset& dataset);

/// Seeded subsample: n distinct examples chosen by a Fisher-Yates
/// permutation (mt19937_64, rejection-sampled bounded draws), emitted in
/// original relative order. n >= |dataset| returns the dataset unchanged.
Dataset sample(const Dataset& dataset, size_t n, uint64_t seed);

/// First n indices of the seeded Fisher-Yates permutation of [0, count).
/// Shared by dataset sampling and blend selection so both use one frozen
/// PRNG convention.
std::vector<size_t> seeded_permutation_prefix(size_t count, size_t n, uint64_t seed);

}  // namespace sdft
