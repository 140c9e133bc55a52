#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdft/config.hpp"

namespace sdft {

/// Subcommand implementations shared by the CLI binary and the acceptance
/// suite. Each validates fully before touching the filesystem, writes the
/// owning module's artifacts plus a run manifest, and returns a process exit
/// status. Fatal errors print one machine-parseable line: `error: <what>`.

int cmd_distill(const RunConfig& config);

/// Single pairs file, or a sweep of label=path entries producing one CSV row
/// per label.
int cmd_eval_shift(const RunConfig& config, const std::vector<std::string>& pairs_args);

int cmd_eval_safety(const RunConfig& config, const std::string& instructions_path,
                    const std::string& mode, const std::optional<std::string>& rescore_path);

int cmd_param_shift(const RunConfig& config, const std::string& seed_path,
                    const std::string& tuned_path);
int cmd_adapter_shift(const RunConfig& config, const std::vector<std::string>& adapter_paths,
                      const std::string& suffix_a, const std::string& suffix_b, double scale);

int cmd_print_config(const RunConfig& config);

}  // namespace sdft
