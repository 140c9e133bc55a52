#include "sdft/dataset.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "json.hpp"

namespace sdft {

using ordered_json = nlohmann::ordered_json;

std::string to_string(TaskTag tag) {
  switch (tag) {
    case TaskTag::general: return "general";
    case TaskTag::math: return "math";
    case TaskTag::function_call: return "function_call";
    case TaskTag::code: return "code";
  }
  return "general";
}

std::optional<TaskTag> task_tag_from_string(const std::string& s) {
  if (s == "general") return TaskTag::general;
  if (s == "math") return TaskTag::math;
  if (s == "function_call") return TaskTag::function_call;
  if (s == "code") return TaskTag::code;
  return std::nullopt;
}

namespace {

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Dataset parse_jsonl(const std::string& bytes) {
  Dataset out;
  std::unordered_set<std::string> seen_ids;
  size_t pos = 0;
  size_t line_index = 0;  // 0-based, counts every physical line
  while (pos < bytes.size()) {
    size_t nl = bytes.find('\n', pos);
    std::string line = bytes.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? bytes.size() : nl + 1;
    size_t line_no = line_index + 1;  // 1-based in messages
    ++line_index;

    if (trimmed(line).empty()) continue;

    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": invalid JSON");
    }
    if (!obj.is_object())
      throw ParseError("line " + std::to_string(line_no) + ": expected a JSON object");

    TaskExample ex;
    for (const char* key : {"instruction", "response"}) {
      if (!obj.contains(key) || !obj[key].is_string())
        throw ParseError("line " + std::to_string(line_no) + ": missing key: " + key);
    }
    ex.instruction = obj["instruction"].get<std::string>();
    ex.response = obj["response"].get<std::string>();
    if (trimmed(ex.instruction).empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty instruction");
    if (ex.response.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty response");

    if (obj.contains("input") && obj["input"].is_string()) {
      auto v = obj["input"].get<std::string>();
      if (!v.empty()) ex.input = v;
    }
    if (obj.contains("task") && obj["task"].is_string()) {
      auto tag = task_tag_from_string(obj["task"].get<std::string>());
      if (!tag)
        throw ParseError("line " + std::to_string(line_no) + ": unknown task tag: " +
                         obj["task"].get<std::string>());
      ex.task = tag;
    }
    if (obj.contains("id")) {
      if (obj["id"].is_string())
        ex.id = obj["id"].get<std::string>();
      else
        ex.id = obj["id"].dump();
      if (!seen_ids.insert(ex.id).second)
        throw ParseError("line " + std::to_string(line_no) + ": duplicate id: " + ex.id);
    } else {
      ex.id = std::to_string(line_index - 1);
      if (!seen_ids.insert(ex.id).second)
        throw ParseError("line " + std::to_string(line_no) + ": duplicate id: " + ex.id);
    }
    out.examples.push_back(std::move(ex));
  }
  return out;
}

std::string emit_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& ex : dataset.examples) {
    ordered_json obj;
    obj["instruction"] = ex.instruction;
    if (ex.input) obj["input"] = *ex.input;
    obj["response"] = ex.response;
    if (ex.task) obj["task"] = to_string(*ex.task);
    obj["id"] = ex.id;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

namespace {

// Unbiased bounded draw via rejection sampling; mt19937_64 output is
// identical across platforms, which keeps sampling reproducible.
uint64_t bounded_draw(std::mt19937_64& rng, uint64_t bound) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

}  // namespace

std::vector<size_t> seeded_permutation_prefix(size_t count, size_t n, uint64_t seed) {
  std::vector<size_t> idx(count);
  for (size_t i = 0; i < count; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  n = std::min(n, count);
  // Fisher-Yates; only the first n slots are needed.
  for (size_t i = 0; i < n; ++i) {
    size_t j = i + static_cast<size_t>(bounded_draw(rng, count - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

Dataset sample(const Dataset& dataset, size_t n, uint64_t seed) {
  if (n >= dataset.size()) {
    Dataset out = dataset;
    out.seed = seed;
    return out;
  }
  auto chosen = seeded_permutation_prefix(dataset.size(), n, seed);
  std::sort(chosen.begin(), chosen.end());
  Dataset out;
  out.source_path = dataset.source_path;
  out.seed = seed;
  out.examples.reserve(n);
  for (size_t i : chosen) out.examples.push_back(dataset.examples[i]);
  return out;
}

}  // namespace sdft
