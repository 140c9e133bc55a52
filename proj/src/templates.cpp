#include "sdft/templates.hpp"

#include <sstream>

namespace sdft {

std::string to_string(TemplatePurpose p) {
  switch (p) {
    case TemplatePurpose::distill: return "distill";
    case TemplatePurpose::train: return "train";
    case TemplatePurpose::eval: return "eval";
  }
  return "distill";
}

namespace {

const char kUsingBody[] =
    "Below are an instruction that describes a task along with a reference answer. "
    "Using the reference answer as a guide, write your own response.\n"
    "\n"
    "### Instruction:\n"
    "\n"
    "{instruction}\n"
    "\n"
    "### Reference Answer:\n"
    "\n"
    "{original_response}\n"
    "\n"
    "### Response:\n";

const char kAlpacaBody[] =
    "Below are an instruction that describes a task. "
    "Write a response that appropriately completes the request.\n"
    "\n"
    "### Instruction:\n"
    "\n"
    "{instruction}\n"
    "\n"
    "### Response:\n";

const char kGsm8kTrainBody[] =
    "You are an expert in math. Below is a math question. "
    "Write a response that appropriately answers the question.\n"
    "\n"
    "{instruction}\n";

const char kGsm8kDistillBody[] =
    "You are an expert in math. Below are a math question and its reference answer. "
    "Refer to the reference answer and write a response that appropriately answers "
    "the question.\n"
    "\n"
    "{instruction}\n"
    "\n"
    "{response}\n"
    "\n"
    "Great! Let's think step by step.\n";

const char kGsm8kEvalBody[] =
    "You are an expert in math. Below is a math question. "
    "Write a response that appropriately answers the question. "
    "Your final answer should be an integer at the end of your response, "
    "formatted as: The answer is {answer}.\n"
    "\n"
    "{instruction}\n";

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  size_t pos = s.find(from);
  if (pos == std::string::npos) throw TemplateError("phrase not found: " + from);
  s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"using", "refer", "alpaca", "gsm8k_train", "gsm8k_distill", "gsm8k_eval"};
}

TemplateSpec builtin(const std::string& name) {
  if (name == "using")
    return {"using", kUsingBody, {"instruction", "original_response"}, TemplatePurpose::distill};
  if (name == "refer")
    return {"refer",
            replace_once(kUsingBody, "Using the reference answer as a guide",
                         "Refer to the reference answer"),
            {"instruction", "original_response"},
            TemplatePurpose::distill};
  if (name == "alpaca")
    return {"alpaca", kAlpacaBody, {"instruction"}, TemplatePurpose::eval};
  if (name == "gsm8k_train")
    return {"gsm8k_train", kGsm8kTrainBody, {"instruction"}, TemplatePurpose::train};
  if (name == "gsm8k_distill")
    return {"gsm8k_distill", kGsm8kDistillBody, {"instruction", "response"},
            TemplatePurpose::distill};
  if (name == "gsm8k_eval")
    return {"gsm8k_eval", kGsm8kEvalBody, {"instruction"}, TemplatePurpose::eval};

  std::string valid;
  for (const auto& n : builtin_names()) {
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw TemplateError("unknown template: " + name + " (valid: " + valid + ")");
}

std::string render(const TemplateSpec& tmpl, const std::map<std::string, std::string>& bindings) {
  for (const auto& [key, _] : bindings)
    if (!tmpl.placeholders.count(key)) throw TemplateError("extra placeholder: " + key);
  for (const auto& p : tmpl.placeholders)
    if (!bindings.count(p)) throw TemplateError("missing placeholder: " + p);

  std::string out;
  out.reserve(tmpl.body.size());
  size_t pos = 0;
  while (pos < tmpl.body.size()) {
    size_t open = tmpl.body.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl.body, pos, std::string::npos);
      break;
    }
    size_t close = tmpl.body.find('}', open);
    if (close == std::string::npos) {
      out.append(tmpl.body, pos, std::string::npos);
      break;
    }
    std::string token = tmpl.body.substr(open + 1, close - open - 1);
    auto it = tmpl.placeholders.count(token) ? bindings.find(token) : bindings.end();
    if (it != bindings.end()) {
      out.append(tmpl.body, pos, open - pos);
      out.append(it->second);
      pos = close + 1;
    } else {
      // Undeclared {token}: literal text, e.g. gsm8k_eval's "{answer}".
      out.append(tmpl.body, pos, close + 1 - pos);
      pos = close + 1;
    }
  }
  return out;
}

TemplateSpec load_template_file(const std::string& text) {
  size_t nl = text.find('\n');
  if (nl == std::string::npos) throw TemplateError("template file: missing header line");
  std::string header = text.substr(0, nl);
  std::string body = text.substr(nl + 1);

  std::istringstream hs(header);
  std::string name_field, purpose_field;
  hs >> name_field >> purpose_field;
  if (name_field.rfind("name:", 0) != 0 || purpose_field.rfind("purpose:", 0) != 0)
    throw TemplateError("template file: header must be `name:<name> purpose:<purpose>`");

  TemplateSpec spec;
  spec.name = name_field.substr(5);
  std::string purpose = purpose_field.substr(8);
  if (purpose == "distill")
    spec.purpose = TemplatePurpose::distill;
  else if (purpose == "train")
    spec.purpose = TemplatePurpose::train;
  else if (purpose == "eval")
    spec.purpose = TemplatePurpose::eval;
  else
    throw TemplateError("template file: unknown purpose: " + purpose);
  if (spec.name.empty()) throw TemplateError("template file: empty name");

  spec.body = body;
  size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string::npos) {
    size_t close = body.find('}', pos);
    if (close == std::string::npos) break;
    spec.placeholders.insert(body.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return spec;
}

}  // namespace sdft
