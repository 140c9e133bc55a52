#include "sdft/distiller.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace sdft {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Validator v) {
  return v == Validator::math_answer ? "math_answer" : "none";
}

void Rational::normalize() {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Parses one token as an exact rational after stripping $ , * _ and a
// trailing period. Returns absent on anything that is not a plain number.
std::optional<Rational> parse_number_token(const std::string& raw) {
  std::string t;
  t.reserve(raw.size());
  for (char c : raw)
    if (c != '$' && c != ',' && c != '*' && c != '_') t += c;
  while (!t.empty() && t.back() == '.') t.pop_back();
  if (t.empty()) return std::nullopt;

  size_t i = 0;
  bool negative = false;
  if (t[i] == '+' || t[i] == '-') {
    negative = t[i] == '-';
    ++i;
  }
  std::string int_part, frac_part;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) int_part += t[i++];
  if (i < t.size() && t[i] == '.') {
    ++i;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) frac_part += t[i++];
    if (frac_part.empty()) return std::nullopt;
  }
  if (i != t.size() || int_part.empty()) return std::nullopt;
  if (int_part.size() + frac_part.size() > 15) return std::nullopt;  // keep exact in int64

  Rational r;
  r.num = 0;
  for (char c : int_part) r.num = r.num * 10 + (c - '0');
  r.den = 1;
  for (char c : frac_part) {
    r.num = r.num * 10 + (c - '0');
    r.den *= 10;
  }
  if (negative) r.num = -r.num;
  r.normalize();
  return r;
}

size_t find_last_ci(const std::string& haystack, const std::string& needle) {
  if (needle.size() > haystack.size()) return std::string::npos;
  auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  for (size_t start = haystack.size() - needle.size() + 1; start-- > 0;) {
    bool match = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (lower(haystack[start + j]) != lower(needle[j])) {
        match = false;
        break;
      }
    }
    if (match) return start;
  }
  return std::string::npos;
}

std::vector<std::string> whitespace_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::optional<Rational> extract_math_answer(const std::string& text) {
  static const std::string kPhrase = "the answer is";
  size_t pos = find_last_ci(text, kPhrase);
  if (pos != std::string::npos) {
    std::string tail = text.substr(pos + kPhrase.size());
    for (const auto& tok : whitespace_tokens(tail)) {
      if (auto r = parse_number_token(tok)) return r;
      break;  // only the token sequence immediately after the phrase counts
    }
    return std::nullopt;
  }

  // No phrase: last standalone number on the final line.
  std::string trimmed_text = trim(text);
  size_t nl = trimmed_text.find_last_of('\n');
  std::string last_line = nl == std::string::npos ? trimmed_text : trimmed_text.substr(nl + 1);
  std::optional<Rational> last;
  for (const auto& tok : whitespace_tokens(last_line))
    if (auto r = parse_number_token(tok)) last = r;
  return last;
}

std::pair<std::string, bool> select(const std::optional<std::string>& distilled,
                                    const std::string& original, Validator validator) {
  if (!distilled || distilled->empty()) return {original, false};
  if (validator == Validator::none) return {*distilled, true};

  auto d = extract_math_answer(*distilled);
  auto o = extract_math_answer(original);
  if (d && o && *d == *o) return {*distilled, true};
  return {original, false};
}

Validator validator_for(const std::optional<TaskTag>& task) {
  return task && *task == TaskTag::math ? Validator::math_answer : Validator::none;
}

std::string render_distill_prompt(const TaskExample& example, const TemplateSpec& tmpl) {
  std::string instruction = example.instruction;
  if (example.input && !example.input->empty()) instruction += "\n\n" + *example.input;

  std::map<std::string, std::string> bindings;
  for (const auto& p : tmpl.placeholders) {
    if (p == "instruction")
      bindings[p] = instruction;
    else if (p == "original_response" || p == "response")
      bindings[p] = example.response;
    else
      throw TemplateError("distillation template has unsupported placeholder: " + p);
  }
  return render(tmpl, bindings);
}

DistillationRecord distill_one(const TaskExample& example, const TemplateSpec& tmpl,
                               const InferenceClient& client,
                               const GenerationRequest& defaults) {
  if (tmpl.purpose != TemplatePurpose::distill)
    throw TemplateError("template " + tmpl.name + " is not a distillation template");

  DistillationRecord rec;
  rec.example = example;
  rec.validator = validator_for(example.task);
  rec.prompt = render_distill_prompt(example, tmpl);

  GenerationRequest req = defaults;
  req.prompt = rec.prompt;
  GenerationResult result;
  try {
    result = client.complete(req);
  } catch (const std::exception&) {
    result.finish_reason = FinishReason::error;
  }

  if (result.finish_reason != FinishReason::error) {
    std::string text = trim(result.text);
    if (!text.empty()) rec.distilled = text;
  }
  auto [selected, used] = select(rec.distilled, example.response, rec.validator);
  rec.selected = selected;
  rec.used_distilled = used;
  return rec;
}

std::vector<size_t> blend_chosen(const std::vector<DistillationRecord>& records, double mix_ratio,
                                 uint64_t seed) {
  if (mix_ratio < 0.0 || mix_ratio > 1.0)
    throw std::invalid_argument("mix_ratio must be in [0,1]");

  std::vector<size_t> eligible;
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].used_distilled) eligible.push_back(i);

  // Half-up rounding of the distilled row count.
  size_t n = static_cast<size_t>(std::floor(mix_ratio * static_cast<double>(eligible.size()) + 0.5));
  // Full permutation, prefix taken: chosen(r1) is a subset of chosen(r2) for r1 <= r2.
  auto perm = seeded_permutation_prefix(eligible.size(), eligible.size(), seed);
  std::vector<size_t> chosen;
  chosen.reserve(n);
  for (size_t k = 0; k < n; ++k) chosen.push_back(eligible[perm[k]]);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Dataset blend(const std::vector<DistillationRecord>& records, double mix_ratio, uint64_t seed) {
  auto chosen = blend_chosen(records, mix_ratio, seed);
  std::vector<bool> use(records.size(), false);
  for (size_t i : chosen) use[i] = true;

  Dataset out;
  out.seed = seed;
  out.examples.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    TaskExample ex = records[i].example;
    if (use[i]) ex.response = *records[i].distilled;
    out.examples.push_back(std::move(ex));
  }
  return out;
}

Validator default_validator_resolver(const TaskExample& example) {
  return validator_for(example.task);
}

DistillationOutput distill_dataset(const Dataset& dataset, const TemplateSpec& tmpl,
                                   const InferenceClient& client,
                                   const GenerationRequest& defaults, double mix_ratio,
                                   uint64_t seed, const ValidatorResolver& resolver) {
  if (tmpl.purpose != TemplatePurpose::distill)
    throw TemplateError("template " + tmpl.name + " is not a distillation template");

  std::vector<GenerationRequest> requests;
  requests.reserve(dataset.size());
  for (const auto& ex : dataset.examples) {
    GenerationRequest req = defaults;
    req.prompt = render_distill_prompt(ex, tmpl);
    requests.push_back(std::move(req));
  }
  auto results = client.complete_batch(requests);

  DistillationOutput out;
  out.records.reserve(dataset.size());
  std::map<std::string, std::pair<size_t, size_t>> per_task;  // tag -> (accepted, total)
  for (size_t i = 0; i < dataset.size(); ++i) {
    const auto& ex = dataset.examples[i];
    DistillationRecord rec;
    rec.example = ex;
    rec.validator = resolver(ex);
    rec.prompt = requests[i].prompt;
    if (results[i].finish_reason != FinishReason::error) {
      std::string text = trim(results[i].text);
      if (!text.empty()) rec.distilled = text;
    }
    auto [selected, used] = select(rec.distilled, ex.response, rec.validator);
    rec.selected = selected;
    rec.used_distilled = used;

    out.report.total += 1;
    if (!rec.distilled)
      out.report.failed += 1;
    else if (rec.used_distilled)
      out.report.accepted += 1;
    else
      out.report.rejected += 1;
    std::string tag = ex.task ? to_string(*ex.task) : "untagged";
    per_task[tag].second += 1;
    if (rec.used_distilled) per_task[tag].first += 1;

    out.records.push_back(std::move(rec));
  }

  out.report.acceptance_rate =
      out.report.total == 0 ? 0.0
                            : static_cast<double>(out.report.accepted) / out.report.total;
  for (const auto& [tag, counts] : per_task)
    out.report.acceptance_rate_by_task[tag] =
        counts.second == 0 ? 0.0 : static_cast<double>(counts.first) / counts.second;

  out.report.mix_ratio = mix_ratio;
  out.dataset = blend(out.records, mix_ratio, seed);
  out.report.blended_distilled = blend_chosen(out.records, mix_ratio, seed).size();
  return out;
}

std::string emit_audit_jsonl(const std::vector<DistillationRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    ordered_json obj;
    obj["id"] = rec.example.id;
    if (rec.example.task) obj["task"] = to_string(*rec.example.task);
    obj["validator"] = to_string(rec.validator);
    obj["used_distilled"] = rec.used_distilled;
    if (rec.distilled) obj["distilled"] = *rec.distilled;
    obj["original"] = rec.example.response;
    obj["selected"] = rec.selected;
    obj["prompt"] = rec.prompt;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string emit_report_json(const DistillationReport& report) {
  ordered_json obj;
  obj["total"] = report.total;
  obj["accepted"] = report.accepted;
  obj["rejected"] = report.rejected;
  obj["failed"] = report.failed;
  obj["acceptance_rate"] = report.acceptance_rate;
  obj["acceptance_rate_by_task"] = report.acceptance_rate_by_task;
  obj["mix_ratio"] = report.mix_ratio;
  obj["blended_distilled"] = report.blended_distilled;
  return obj.dump(2) + "\n";
}

}  // namespace sdft
