#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdft/commands.hpp"

namespace {

// Config file first, then individual --set key=value overrides. Flags win.
sdft::RunConfig build_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
  sdft::RunConfig config;
  if (!config_path.empty()) config = sdft::load_config_file(config_path);
  for (const auto& entry : overrides) {
    size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw sdft::ConfigError("override must be key=value: " + entry);
    sdft::apply_override(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDFT dataset self-distillation pipeline and evaluation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "config file (key = value lines)");
  app.add_option("--set", overrides, "config override, key=value (wins over file)");

  auto* distill = app.add_subcommand("distill", "rewrite dataset responses through the seed model");
  std::string input, output;
  distill->add_option("--input", input, "input dataset (JSONL)");
  distill->add_option("--output", output, "output dataset (JSONL)");

  auto* eval_shift = app.add_subcommand("eval-shift", "distribution-shift metrics over output pairs");
  std::vector<std::string> pairs_args;
  eval_shift->add_option("--pairs", pairs_args,
                         "pairs JSONL; repeatable label=path entries run a sweep")
      ->required();

  auto* eval_safety = app.add_subcommand("eval-safety", "refusal-rate evaluation");
  std::string instructions_path, mode = "raw", rescore_path;
  eval_safety->add_option("--instructions", instructions_path,
                          "instructions file (text lines or dataset JSONL)");
  eval_safety->add_option("--mode", mode, "raw or jailbreak")->default_val("raw");
  eval_safety->add_option("--rescore", rescore_path, "re-score stored responses (cases JSONL)");

  auto* param_shift = app.add_subcommand("param-shift", "parameter-shift L2 between checkpoints");
  std::string seed_file, tuned_file, suffix_a = ".lora_A.weight", suffix_b = ".lora_B.weight";
  std::vector<std::string> adapter_files;
  double adapter_scale = 1.0;
  param_shift->add_option("--seed-file", seed_file, "seed checkpoint (single-file tensor format)");
  param_shift->add_option("--tuned-file", tuned_file, "tuned checkpoint");
  param_shift->add_option("--adapter", adapter_files, "adapter file(s); delta norm mode");
  param_shift->add_option("--suffix-a", suffix_a, "adapter A-factor name suffix");
  param_shift->add_option("--suffix-b", suffix_b, "adapter B-factor name suffix");
  param_shift->add_option("--scale", adapter_scale, "adapter scale (alpha/r)");

  app.add_subcommand("print-config", "print the effective config and its hash");

  CLI11_PARSE(app, argc, argv);

  try {
    sdft::RunConfig config = build_config(config_path, overrides);
    if (!input.empty()) config.input_path = input;
    if (!output.empty()) config.output_path = output;

    if (distill->parsed()) return sdft::cmd_distill(config);
    if (eval_shift->parsed()) return sdft::cmd_eval_shift(config, pairs_args);
    if (eval_safety->parsed()) {
      std::optional<std::string> rescore;
      if (!rescore_path.empty()) rescore = rescore_path;
      if (instructions_path.empty() && !rescore)
        throw sdft::ConfigError("eval-safety needs --instructions or --rescore");
      return sdft::cmd_eval_safety(config, instructions_path, mode, rescore);
    }
    if (param_shift->parsed()) {
      if (!adapter_files.empty())
        return sdft::cmd_adapter_shift(config, adapter_files, suffix_a, suffix_b, adapter_scale);
      if (seed_file.empty() || tuned_file.empty())
        throw sdft::ConfigError("param-shift needs --seed-file and --tuned-file, or --adapter");
      return sdft::cmd_param_shift(config, seed_file, tuned_file);
    }
    return sdft::cmd_print_config(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
