#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdft {

struct TemplateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TemplatePurpose { distill, train, eval };

std::string to_string(TemplatePurpose p);

/// A named prompt template. Only placeholders listed in `placeholders` are
/// substituted; any other {token} in the body is literal text (the gsm8k_eval
/// body instructs the model with a literal "{answer}").
struct TemplateSpec {
  std::string name;
  std::string body;
  std::set<std::string> placeholders;
  TemplatePurpose purpose = TemplatePurpose::distill;
};

/// Returns one of the built-in templates:
/// using, refer, alpaca, gsm8k_train, gsm8k_distill, gsm8k_eval.
TemplateSpec builtin(const std::string& name);

std::vector<std::string> builtin_names();

/// Substitutes every declared placeholder. Bindings must cover exactly
/// template.placeholders; a missing or extra binding is an error naming it.
std::string render(const TemplateSpec& tmpl, const std::map<std::string, std::string>& bindings);

/// Loads a custom template file: one header line `name:<name> purpose:<purpose>`
/// followed by the body. Placeholders are inferred from {token} occurrences.
TemplateSpec load_template_file(const std::string& text);

}  // namespace sdft
