#include "sdft/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdft/dataset.hpp"
#include "sdft/templates.hpp"

namespace sdft {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: " + v);
  }
}

uint64_t parse_uint(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(key + ": not an unsigned integer: " + v);
  return out;
}

}  // namespace

void apply_override(RunConfig& c, const std::string& key, const std::string& raw_value) {
  std::string value = unquote(trim(raw_value));
  if (key == "backend.base_url") c.backend.base_url = value;
  else if (key == "backend.model") c.backend.model = value;
  else if (key == "backend.embed_url") c.backend.embed_url = value;
  else if (key == "backend.embed_model") c.backend.embed_model = value;
  else if (key == "backend.completions_path") c.backend.completions_path = value;
  else if (key == "backend.embeddings_path") c.backend.embeddings_path = value;
  else if (key == "backend.timeout_s") c.backend.timeout_s = parse_double(key, value);
  else if (key == "backend.retries") c.backend.retries = static_cast<int>(parse_uint(key, value));
  else if (key == "backend.parallelism")
    c.backend.parallelism = static_cast<int>(parse_uint(key, value));
  else if (key == "backend.backoff_initial_ms")
    c.backend.backoff_initial_ms = parse_double(key, value);
  else if (key == "backend.token_env") c.backend.token_env = value;
  else if (key == "template") c.template_name = value;
  else if (key == "template_file") c.template_file = value;
  else if (key.rfind("validator.", 0) == 0) c.validator_overrides[key.substr(10)] = value;
  else if (key == "mix_ratio") c.mix_ratio = parse_double(key, value);
  else if (key == "seed") c.seed = parse_uint(key, value);
  else if (key == "sample_n") c.sample_n = static_cast<size_t>(parse_uint(key, value));
  else if (key == "max_tokens") c.max_tokens = static_cast<int>(parse_uint(key, value));
  else if (key == "temperature") c.temperature = parse_double(key, value);
  else if (key == "input") c.input_path = value;
  else if (key == "output") c.output_path = value;
  else if (key == "audit") c.audit_path = value;
  else if (key == "report") c.report_path = value;
  else if (key == "keyword_file") c.keyword_file = value;
  else if (key == "jailbreak_suffix") c.jailbreak_suffix = value;
  else throw ConfigError("unknown config key: " + key);
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_override(c, trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void RunConfig::validate() const {
  if (mix_ratio < 0.0 || mix_ratio > 1.0)
    throw ConfigError("mix_ratio must be in [0,1], got " + std::to_string(mix_ratio));
  if (backend.parallelism < 1) throw ConfigError("backend.parallelism must be >= 1");
  if (backend.retries < 0) throw ConfigError("backend.retries must be >= 0");
  if (backend.timeout_s <= 0.0) throw ConfigError("backend.timeout_s must be > 0");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (!template_file) builtin(template_name);  // throws on unknown name
  for (const auto& [tag, validator] : validator_overrides) {
    if (!task_tag_from_string(tag)) throw ConfigError("validator override: unknown task tag: " + tag);
    if (validator != "math_answer" && validator != "none")
      throw ConfigError("validator override: unknown validator: " + validator);
  }
  if (jailbreak_suffix && jailbreak_suffix->empty())
    throw ConfigError("jailbreak_suffix must be non-empty when set");
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "backend.base_url=" << backend.base_url << "\n";
  os << "backend.model=" << backend.model << "\n";
  os << "backend.embed_url=" << backend.embed_url << "\n";
  os << "backend.embed_model=" << backend.embed_model << "\n";
  os << "backend.completions_path=" << backend.completions_path << "\n";
  os << "backend.embeddings_path=" << backend.embeddings_path << "\n";
  os << "backend.timeout_s=" << backend.timeout_s << "\n";
  os << "backend.retries=" << backend.retries << "\n";
  os << "backend.parallelism=" << backend.parallelism << "\n";
  os << "backend.backoff_initial_ms=" << backend.backoff_initial_ms << "\n";
  os << "backend.token_env=" << backend.token_env << "\n";
  os << "template=" << template_name << "\n";
  os << "template_file=" << (template_file ? *template_file : "") << "\n";
  for (const auto& [tag, v] : validator_overrides) os << "validator." << tag << "=" << v << "\n";
  os << "mix_ratio=" << mix_ratio << "\n";
  os << "seed=" << seed << "\n";
  os << "sample_n=" << (sample_n ? std::to_string(*sample_n) : "") << "\n";
  os << "max_tokens=" << max_tokens << "\n";
  os << "temperature=" << temperature << "\n";
  os << "input=" << input_path << "\n";
  os << "output=" << output_path << "\n";
  os << "audit=" << audit_path << "\n";
  os << "report=" << report_path << "\n";
  os << "keyword_file=" << keyword_file << "\n";
  os << "jailbreak_suffix=" << (jailbreak_suffix ? *jailbreak_suffix : "") << "\n";
  return os.str();
}

std::string config_hash(const RunConfig& config) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : config.canonical()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string manifest_json(const RunConfig& config) {
  ordered_json obj;
  obj["config_hash"] = config_hash(config);
  obj["seed"] = config.seed;
  obj["template"] = config.template_file ? *config.template_file : config.template_name;
  obj["backend_model"] = config.backend.model;
  obj["tool_version"] = kToolVersion;
  obj["decoding"] = {{"temperature", config.temperature}, {"max_tokens", config.max_tokens}};
  return obj.dump(2) + "\n";
}

std::string default_config_text() { return RunConfig{}.canonical(); }

}  // namespace sdft
