#pragma once

#include <exception>
#include <iosfwd>
#include <string>

#include "emdarts/cli/run_config.hpp"

namespace emdarts::cli {

struct CommandOptions {
  std::string genotype_path;  // empty: <out_dir>/genotype.txt
  std::string weights_path;   // empty: command-specific default under out_dir
  bool resume = false;        // search: continue from the checkpoint if present
};

// Each command writes its artifacts under config.out_dir(), echoes the resolved
// config there, prints the seed first and a one-line summary last.
void cmd_gen_data(const RunConfig& config, std::ostream& log);
void cmd_search(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
void cmd_train(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
void cmd_prune(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
void cmd_eval(const RunConfig& config, const CommandOptions& opts, std::ostream& log);

// 1 configuration, 2 data/format, 3 numerical, 4 anything else.
int exit_code_for(const std::exception& e);

// Dispatches by name and maps exceptions to exit codes, printing the message to `err`.
int run_command(const std::string& name, const RunConfig& config, const CommandOptions& opts, std::ostream& log,
                std::ostream& err);

}  // namespace emdarts::cli
