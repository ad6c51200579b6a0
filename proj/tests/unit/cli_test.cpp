#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "emdarts/cli/commands.hpp"
#include "emdarts/cli/run_config.hpp"
#include "emdarts/error.hpp"

namespace cli = emdarts::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("emdarts_cli_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Runs the CLI binary, returns its exit code; stdout+stderr go to `log`.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + EMDARTS_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTinyConfig =
    "# small enough for a unit test\n"
    "synthetic.subjects = 4\n"
    "synthetic.sessions = 3\n"
    "synthetic.seconds = 8\n"
    "supernet.nodes = 4\n"
    "supernet.cell_nodes = 1\n"
    "supernet.stem_channels = 4\n"
    "search.epochs = 1\n"
    "train.epochs = 2\n"
    "prune.retrain_epochs = 1\n";

}  // namespace

TEST(RunConfig, DefaultsForEveryKey) {
  cli::RunConfig c;
  for (const auto& k : cli::config_keys()) {
    EXPECT_EQ(c.get(k.key), k.default_value) << k.key;
    EXPECT_GT(std::string(k.doc).size(), 0u);
  }
  EXPECT_EQ(c.seed(), 1u);
  EXPECT_EQ(c.data_path(), "emdarts_out/gaze.csv");
}

TEST(RunConfig, ParsesCommentsAndWhitespace) {
  std::istringstream in("  seed = 42  # master\n\n# nothing\nsearch.epochs=3\r\n");
  const auto c = cli::RunConfig::parse(in);
  EXPECT_EQ(c.seed(), 42u);
  EXPECT_EQ(c.search().epochs, 3u);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  std::istringstream unknown("search.epoch = 3\n");
  try {
    cli::RunConfig::parse(unknown, "run.cfg");
    FAIL() << "accepted an unknown key";
  } catch (const emdarts::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("search.epoch"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("run.cfg:1"), std::string::npos);
  }
  std::istringstream no_eq("seed 4\n");
  EXPECT_THROW(cli::RunConfig::parse(no_eq), emdarts::ConfigError);
  cli::RunConfig c;
  c.set("seed", "minus one");
  EXPECT_THROW(c.seed(), emdarts::ConfigError);
  EXPECT_THROW(c.set("nope", "1"), emdarts::ConfigError);
}

TEST(RunConfig, EchoReproducesConfig) {
  std::istringstream in("seed = 9\nsearch.second_order = true\nsupernet.reduction_nodes = 2 3\n");
  const auto c = cli::RunConfig::parse(in);
  std::ostringstream echo;
  c.write(echo);
  std::istringstream back(echo.str());
  const auto d = cli::RunConfig::parse(back);
  for (const auto& k : cli::config_keys()) EXPECT_EQ(c.get(k.key), d.get(k.key)) << k.key;
  std::ostringstream echo2;
  d.write(echo2);
  EXPECT_EQ(echo.str(), echo2.str());
}

TEST(ExitCodes, ByErrorKind) {
  EXPECT_EQ(cli::exit_code_for(emdarts::ConfigError("x")), 1);
  EXPECT_EQ(cli::exit_code_for(emdarts::InputError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(emdarts::FormatError("x")), 2);
  EXPECT_EQ(cli::exit_code_for(emdarts::NumericalError("x")), 3);
  EXPECT_EQ(cli::exit_code_for(std::runtime_error("x")), 4);
}

TEST(Commands, MissingDataNamesThePath) {
  TempDir dir("missing");
  cli::RunConfig c;
  c.set("out_dir", dir.path.string());
  c.set("data.path", (dir.path / "absent.csv").string());
  std::ostringstream log, err;
  EXPECT_EQ(cli::run_command("search", c, {}, log, err), 2);
  EXPECT_NE(err.str().find("absent.csv"), std::string::npos) << err.str();
  EXPECT_EQ(log.str().rfind("seed 1\n", 0), 0u);
}

TEST(Commands, UnknownCommandIsConfigError) {
  std::ostringstream log, err;
  EXPECT_EQ(cli::run_command("fly", cli::RunConfig(), {}, log, err), 1);
}

TEST(Binary, BadConfigExitsOne) {
  TempDir dir("badcfg");
  std::ofstream(dir.path / "bad.cfg") << "not.a.key = 1\n";
  EXPECT_EQ(run_cli("--config \"" + (dir.path / "bad.cfg").string() + "\" gen-data", dir.path / "log.txt"), 1);
  EXPECT_NE(slurp(dir.path / "log.txt").find("not.a.key"), std::string::npos);
  EXPECT_NE(run_cli("", dir.path / "log2.txt"), 0);
}

TEST(Binary, TinyPipelineIsReproducible) {
  TempDir dir("pipeline");
  std::ofstream(dir.path / "tiny.cfg") << kTinyConfig;
  const std::string cfg = "--config \"" + (dir.path / "tiny.cfg").string() + "\" --seed 5 ";
  for (const std::string out : {"a", "b"}) {
    const std::string o = "--out \"" + (dir.path / out).string() + "\" ";
    for (const std::string cmd : {"gen-data", "search", "train", "prune", "eval"}) {
      const fs::path log = dir.path / (out + "_" + cmd + ".log");
      ASSERT_EQ(run_cli(cfg + o + cmd, log), 0) << cmd << ":\n" << slurp(log);
      const std::string text = slurp(log);
      EXPECT_EQ(text.rfind("seed 5\n", 0), 0u) << cmd;
      EXPECT_NE(text.find(cmd == "gen-data" ? "gen-data" : cmd + ":"), std::string::npos) << text;
    }
  }
  for (const char* f : {"gaze.csv", "genotype.txt", "search_metrics.csv", "search_checkpoint.txt", "weights.txt",
                         "train_metrics.csv", "genotype_pruned.txt", "prune_log.txt", "entropy_report.csv",
                         "eval_report.txt", "roc.csv", "pr.csv", "config.resolved.txt"}) {
    ASSERT_TRUE(fs::exists(dir.path / "a" / f)) << f;
    if (std::string(f) != "config.resolved.txt" && std::string(f) != "eval_report.txt") {
      EXPECT_EQ(slurp(dir.path / "a" / f), slurp(dir.path / "b" / f)) << f;
    }
  }
  // the echoed config drives an identical search
  const fs::path echoed = dir.path / "a" / "config.resolved.txt";
  const std::string again = "--config \"" + echoed.string() + "\" --out \"" + (dir.path / "c").string() + "\" ";
  ASSERT_EQ(run_cli(again + "gen-data", dir.path / "c1.log"), 0) << slurp(dir.path / "c1.log");
  ASSERT_EQ(run_cli(again + "search", dir.path / "c2.log"), 0) << slurp(dir.path / "c2.log");
  EXPECT_EQ(slurp(dir.path / "a" / "genotype.txt"), slurp(dir.path / "c" / "genotype.txt"));
}
