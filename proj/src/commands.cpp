#include "sdft/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "sdft/dataset.hpp"
#include "sdft/distiller.hpp"
#include "sdft/safety_eval.hpp"
#include "sdft/shift_metrics.hpp"
#include "sdft/templates.hpp"
#include "sdft/tensor_io.hpp"

namespace sdft {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

void check_writable(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("path not writable: " + path);
}

std::string manifest_path_for(const std::string& report_path) {
  return report_path + ".manifest.json";
}

int fail(const std::exception& e) {
  std::cerr << "error: " << e.what() << std::endl;
  return 1;
}

TemplateSpec resolve_template(const RunConfig& config) {
  if (config.template_file) return load_template_file(read_file(*config.template_file));
  return builtin(config.template_name);
}

ValidatorResolver resolver_from(const RunConfig& config) {
  auto overrides = config.validator_overrides;
  return [overrides](const TaskExample& ex) {
    if (ex.task) {
      auto it = overrides.find(to_string(*ex.task));
      if (it != overrides.end())
        return it->second == "math_answer" ? Validator::math_answer : Validator::none;
    }
    return default_validator_resolver(ex);
  };
}

std::vector<std::string> load_keywords(const RunConfig& config, std::string& list_id) {
  if (config.keyword_file.empty()) {
    list_id = default_keyword_list_id();
    return default_refusal_keywords();
  }
  list_id = config.keyword_file;
  std::vector<std::string> keywords;
  std::istringstream in(read_file(config.keyword_file));
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) keywords.push_back(line);
  }
  if (keywords.empty()) throw ConfigError("keyword file is empty: " + config.keyword_file);
  return keywords;
}

}  // namespace

int cmd_distill(const RunConfig& config) {
  try {
    config.validate();
    if (config.backend.base_url.empty()) throw ConfigError("backend.base_url not set");
    if (config.input_path.empty()) throw ConfigError("input path not set");
    TemplateSpec tmpl = resolve_template(config);
    if (tmpl.purpose != TemplatePurpose::distill)
      throw ConfigError("template " + tmpl.name + " has purpose " + to_string(tmpl.purpose) +
                        ", need distill");
    std::string input = read_file(config.input_path);
    check_writable(config.output_path);
    check_writable(config.audit_path);
    check_writable(config.report_path);

    Dataset dataset = parse_jsonl(input);
    dataset.source_path = config.input_path;
    if (config.sample_n) dataset = sample(dataset, *config.sample_n, config.seed);

    InferenceClient client(config.backend);
    GenerationRequest defaults;
    defaults.max_tokens = config.max_tokens;
    defaults.temperature = config.temperature;

    auto out = distill_dataset(dataset, tmpl, client, defaults, config.mix_ratio, config.seed,
                               resolver_from(config));

    write_file(config.output_path, emit_jsonl(out.dataset));
    write_file(config.audit_path, emit_audit_jsonl(out.records));
    write_file(config.report_path, emit_report_json(out.report));
    write_file(manifest_path_for(config.report_path), manifest_json(config));

    std::cout << "distilled " << out.report.total << " examples: " << out.report.accepted
              << " accepted, " << out.report.rejected << " rejected, " << out.report.failed
              << " failed (acceptance rate " << out.report.acceptance_rate << ")\n";
    std::cout << out.report.blended_distilled << " rows carry distilled responses at mix_ratio "
              << config.mix_ratio << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_eval_shift(const RunConfig& config, const std::vector<std::string>& pairs_args) {
  try {
    config.validate();
    if (config.backend.base_url.empty() && config.backend.embed_url.empty())
      throw ConfigError("backend.base_url (or backend.embed_url) not set");
    if (pairs_args.empty()) throw ConfigError("no pairs file given");
    InferenceClient client(config.backend);

    // Sweep when entries look like label=path; single report otherwise.
    bool sweep = pairs_args.size() > 1 ||
                 (pairs_args[0].find('=') != std::string::npos &&
                  pairs_args[0].find('=') < pairs_args[0].find('/'));
    if (!sweep) {
      auto pairs = parse_pairs_jsonl(read_file(pairs_args[0]));
      auto report = shift_report(pairs, client);
      write_file(config.report_path, report.to_json());
      std::string csv_path = config.report_path + ".csv";
      write_file(csv_path, report.to_csv());
      write_file(manifest_path_for(config.report_path), manifest_json(config));
      std::cout << "bleu4=" << report.bleu4 << " rouge_l=" << report.rouge_l
                << " mean_embedding_similarity=" << report.mean_embedding_similarity << "\n";
      return 0;
    }

    std::ostringstream csv;
    csv << "label,bleu4,rouge_l,mean_embedding_similarity,n_pairs\n";
    for (const auto& arg : pairs_args) {
      size_t eq = arg.find('=');
      if (eq == std::string::npos) throw ConfigError("sweep entry must be label=path: " + arg);
      std::string label = arg.substr(0, eq), path = arg.substr(eq + 1);
      auto pairs = parse_pairs_jsonl(read_file(path));
      auto report = shift_report(pairs, client);
      csv << label << "," << report.bleu4 << "," << report.rouge_l << ","
          << report.mean_embedding_similarity << "," << report.n_pairs << "\n";
    }
    std::string csv_path = config.report_path + ".csv";
    write_file(csv_path, csv.str());
    write_file(manifest_path_for(config.report_path), manifest_json(config));
    std::cout << "sweep written to " << csv_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_eval_safety(const RunConfig& config, const std::string& instructions_path,
                    const std::string& mode_name,
                    const std::optional<std::string>& rescore_path) {
  try {
    config.validate();
    SafetyMode mode;
    if (mode_name == "raw")
      mode = SafetyMode::raw;
    else if (mode_name == "jailbreak")
      mode = SafetyMode::jailbreak;
    else
      throw ConfigError("mode must be raw or jailbreak: " + mode_name);
    if (mode == SafetyMode::jailbreak && !config.jailbreak_suffix)
      throw ConfigError("jailbreak mode requires jailbreak_suffix in config");

    std::string list_id;
    auto keywords = load_keywords(config, list_id);

    SafetyRun run;
    if (rescore_path) {
      auto cases = parse_cases_jsonl(read_file(*rescore_path));
      run = rescore(cases, keywords, list_id, mode);
    } else {
      if (config.backend.base_url.empty()) throw ConfigError("backend.base_url not set");
      std::string raw = read_file(instructions_path);
      std::vector<std::string> instructions;
      // Dataset JSONL (response ignored) or plain text, one per line.
      std::string first = raw.substr(0, raw.find_first_not_of(" \t\r\n") + 1);
      if (!first.empty() && first.back() == '{') {
        for (const auto& ex : parse_jsonl(raw).examples) instructions.push_back(ex.instruction);
      } else {
        std::istringstream in(raw);
        std::string line;
        while (std::getline(in, line)) {
          while (!line.empty() && line.back() == '\r') line.pop_back();
          if (!line.empty()) instructions.push_back(line);
        }
      }
      InferenceClient client(config.backend);
      run = run_safety_eval(instructions, client, mode, keywords, list_id,
                            config.jailbreak_suffix);
    }

    write_file(config.report_path, run.report.to_json());
    write_file(config.report_path + ".csv", run.report.to_csv());
    write_file(config.audit_path, emit_cases_jsonl(run.cases));
    write_file(manifest_path_for(config.report_path), manifest_json(config));
    if (run.report.raw_safe_rate)
      std::cout << "raw_safe_rate=" << *run.report.raw_safe_rate << "\n";
    if (run.report.jailbreak_safe_rate)
      std::cout << "jailbreak_safe_rate=" << *run.report.jailbreak_safe_rate << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_param_shift(const RunConfig& config, const std::string& seed_path,
                    const std::string& tuned_path) {
  try {
    config.validate();
    TensorFile seed = parse_tensor_file_at(seed_path);
    TensorFile tuned = parse_tensor_file_at(tuned_path);
    double raw = parameter_shift(seed, tuned);
    size_t n = total_elements(seed);
    double normalized = n == 0 ? 0.0 : raw / std::sqrt(static_cast<double>(n));

    nlohmann::ordered_json obj;
    obj["l2"] = raw;
    obj["l2_per_sqrt_param"] = normalized;
    obj["total_elements"] = n;
    write_file(config.report_path, obj.dump(2) + "\n");
    write_file(manifest_path_for(config.report_path), manifest_json(config));
    std::cout << "l2=" << raw << " l2_per_sqrt_param=" << normalized << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_adapter_shift(const RunConfig& config, const std::vector<std::string>& adapter_paths,
                      const std::string& suffix_a, const std::string& suffix_b, double scale) {
  try {
    config.validate();
    std::vector<AdapterPair> pairs;
    size_t n = 0;
    for (const auto& path : adapter_paths) {
      TensorFile file = parse_tensor_file_at(path);
      auto file_pairs = pair_adapters(file, suffix_a, suffix_b, scale);
      for (auto& p : file_pairs) {
        n += p.b.shape[0] * p.a.shape[1];
        pairs.push_back(std::move(p));
      }
    }
    double raw = adapter_shift(pairs);
    double normalized = n == 0 ? 0.0 : raw / std::sqrt(static_cast<double>(n));

    nlohmann::ordered_json obj;
    obj["l2"] = raw;
    obj["l2_per_sqrt_param"] = normalized;
    obj["total_elements"] = n;
    obj["adapter_pairs"] = pairs.size();
    write_file(config.report_path, obj.dump(2) + "\n");
    write_file(manifest_path_for(config.report_path), manifest_json(config));
    std::cout << "l2=" << raw << " l2_per_sqrt_param=" << normalized << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int cmd_print_config(const RunConfig& config) {
  std::cout << config.canonical();
  std::cout << "# config_hash=" << config_hash(config) << "\n";
  return 0;
}

}  // namespace sdft
