#include <cstdlib>
#include <iostream>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "emdarts/cli/commands.hpp"
#include "emdarts/error.hpp"

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string out_dir;
  std::string seed;
};

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // tensors are freed and reallocated every step; keep them off mmap
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
  CLI::App app{"Hierarchical differentiable architecture search for gaze-based verification"};
  app.require_subcommand(1);
  GlobalFlags flags;
  emdarts::cli::CommandOptions opts;
  app.add_option("--config", flags.config_path, "key = value config file");
  app.add_option("--seed", flags.seed, "master seed (overrides the config)");
  app.add_option("--out", flags.out_dir, "output directory (overrides the config and EMDARTS_OUT_ROOT)");

  app.add_subcommand("gen-data", "generate the synthetic gaze CSV");
  auto* search = app.add_subcommand("search", "alternating local/global architecture search");
  search->add_flag("--resume", opts.resume, "continue from search_checkpoint.txt when present");
  auto* train = app.add_subcommand("train", "train the discrete network of a genotype");
  train->add_option("--genotype", opts.genotype_path, "genotype file (default <out>/genotype.txt)");
  auto* prune = app.add_subcommand("prune", "transfer-entropy layer pruning");
  prune->add_option("--genotype", opts.genotype_path, "must match the genotype stored with the weights");
  prune->add_option("--weights", opts.weights_path, "trained weights (default <out>/weights.txt)");
  auto* eval = app.add_subcommand("eval", "verification metrics on the held-out sessions");
  eval->add_option("--weights", opts.weights_path, "weights (default <out>/weights_pruned.txt, else weights.txt)");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  emdarts::cli::RunConfig config;
  try {
    if (!flags.config_path.empty()) config = emdarts::cli::RunConfig::load(flags.config_path);
    if (!flags.seed.empty()) config.set("seed", flags.seed);
    if (!flags.out_dir.empty()) {
      config.set("out_dir", flags.out_dir);
    } else if (flags.config_path.empty() || config.out_dir() == "emdarts_out") {
      if (const char* root = std::getenv("EMDARTS_OUT_ROOT"); root != nullptr && *root != '\0') {
        config.set("out_dir", root);
      }
    }
    config.seed();
  } catch (const std::exception& e) {
    std::cerr << "emdarts " << command << ": configuration error: " << e.what() << '\n';
    return 1;
  }
  return emdarts::cli::run_command(command, config, opts, std::cout, std::cerr);
}
