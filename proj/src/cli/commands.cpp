#include "emdarts/cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "emdarts/data/csv.hpp"
#include "emdarts/entropy/entropy.hpp"
#include "emdarts/entropy/prune.hpp"
#include "emdarts/error.hpp"
#include "emdarts/eval/embedding.hpp"
#include "emdarts/eval/metrics.hpp"
#include "emdarts/search/checkpoint.hpp"
#include "emdarts/search/search.hpp"
#include "emdarts/search/train.hpp"
#include "emdarts/supernet/genotype.hpp"
#include "emdarts/supernet/network.hpp"

namespace emdarts::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string prepare_out(const RunConfig& config, std::ostream& log) {
  const std::string dir = config.out_dir();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
  std::ofstream echo(dir + "/config.resolved.txt");
  if (!echo) throw InputError("cannot write " + dir + "/config.resolved.txt");
  config.write(echo);
  log << "seed " << config.seed() << '\n';
  return dir;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

struct Splits {
  data::Dataset all_train;
  data::Dataset search_train;
  data::Dataset search_val;
  data::Dataset test;
};

Splits load_splits(const RunConfig& config, std::ostream& log) {
  const std::string path = config.data_path();
  const auto sequences = data::load_csv(path);
  auto [train_seqs, test_seqs] = data::hold_out_last_session(sequences);
  const auto params = config.preprocess();
  Splits s;
  s.all_train = data::windows_from(train_seqs, params);
  s.test = data::windows_from(test_seqs, params, s.all_train.subjects);
  auto [a, b] = data::split(s.all_train, config.split());
  s.search_train = std::move(a);
  s.search_val = std::move(b);
  log << "data " << path << ": " << sequences.size() << " sequences, " << s.all_train.num_subjects() << " subjects, "
      << s.search_train.size() << " search-train / " << s.search_val.size() << " search-val / " << s.test.size()
      << " test windows\n";
  return s;
}

void write_search_metrics(const search::SearchState& s, const std::string& path) {
  auto out = open_out(path);
  out << "epoch,train_loss,val_loss,val_acc,lr\n";
  out << "0,," << exact(s.initial.val_loss) << ',' << exact(s.initial.val_acc) << ",\n";
  for (const auto& e : s.history) {
    out << e.epoch << ',' << exact(e.train_loss) << ',' << exact(e.val_loss) << ',' << exact(e.val_acc) << ','
        << exact(e.lr) << '\n';
  }
}

std::string or_default(const std::string& given, const std::string& fallback) {
  return given.empty() ? fallback : given;
}

}  // namespace

void cmd_gen_data(const RunConfig& config, std::ostream& log) {
  prepare_out(config, log);
  const auto cfg = config.synthetic();
  const auto sequences = data::generate_synthetic(cfg);
  const std::string path = config.data_path();
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  data::save_csv(path, sequences);
  log << "gen-data: wrote " << sequences.size() << " sequences (" << cfg.num_subjects << " subjects x "
      << cfg.sessions_per_subject << " sessions, " << fmt(cfg.sample_rate_hz) << " Hz) to " << path << '\n';
}

void cmd_search(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
  const std::string dir = prepare_out(config, log);
  const Splits data = load_splits(config, log);
  nas::SupernetConfig net_cfg = config.supernet();
  net_cfg.num_classes = data.all_train.num_subjects();
  const auto search_cfg = config.search();
  search::SearchState state(net_cfg, search_cfg);
  const std::string checkpoint = dir + "/search_checkpoint.txt";
  if (opts.resume && fs::exists(checkpoint)) {
    search::load_checkpoint_file(state, checkpoint);
    log << "resumed from " << checkpoint << " at epoch " << state.epoch << '\n';
  }
  log << "supernet: " << net_cfg.nodes << " nodes, " << state.net.geometry().num_global_edges() << " global edges, "
      << state.net.geometry().num_local_edges() << " local edges per cell, " << state.net.weight_count()
      << " weights\n";
  search::run_search(state, data.search_train, data.search_val, [&](const search::SearchState& s) {
    const auto& e = s.history.back();
    log << "epoch " << e.epoch << '/' << s.config.epochs << " train_loss " << fmt(e.train_loss) << " val_loss "
        << fmt(e.val_loss) << " val_acc " << fmt(e.val_acc) << " lr " << fmt(e.lr) << '\n';
    search::save_checkpoint_file(s, checkpoint);
    write_search_metrics(s, dir + "/search_metrics.csv");
  });
  write_search_metrics(state, dir + "/search_metrics.csv");
  search::save_checkpoint_file(state, checkpoint);
  const nas::Genotype g = state.net.discretize();
  nas::write_genotype_file(g, dir + "/genotype.txt");
  const nas::Network probe(g, net_cfg.num_classes, 0);
  log << "search: " << state.epoch << " epochs, val_loss " << fmt(state.initial.val_loss) << " -> "
      << fmt(state.history.empty() ? state.initial.val_loss : state.history.back().val_loss) << ", genotype with "
      << probe.parameter_count() << " weights written to " << dir << "/genotype.txt\n";
}

void cmd_train(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
  const std::string dir = prepare_out(config, log);
  const std::string gpath = or_default(opts.genotype_path, dir + "/genotype.txt");
  const nas::Genotype g = nas::read_genotype_file(gpath);
  const Splits data = load_splits(config, log);
  const auto cfg = config.train();
  auto metrics = open_out(dir + "/train_metrics.csv");
  metrics << "epoch,train_loss,train_acc,lr,drop_path_prob\n";
  auto result = search::train_final(g, data.all_train, cfg, [&](const search::TrainEpoch& e) {
    metrics << e.epoch + 1 << ',' << exact(e.train_loss) << ',' << exact(e.train_accuracy) << ',' << exact(e.lr) << ','
            << exact(e.drop_path_prob) << '\n';
    log << "epoch " << e.epoch + 1 << '/' << cfg.epochs << " train_loss " << fmt(e.train_loss) << " train_acc "
        << fmt(e.train_accuracy) << " lr " << fmt(e.lr) << '\n';
  });
  const std::string wpath = or_default(opts.weights_path, dir + "/weights.txt");
  result.network.save_file(wpath);
  const auto acc = search::evaluate(result.network, data.all_train);
  log << "train: " << cfg.epochs << " epochs, " << result.network.parameter_count() << " weights, train accuracy "
      << fmt(acc.accuracy) << ", saved to " << wpath << '\n';
}

void cmd_prune(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
  const std::string dir = prepare_out(config, log);
  const std::string wpath = or_default(opts.weights_path, dir + "/weights.txt");
  nas::Network net = nas::Network::load_file(wpath);
  if (!opts.genotype_path.empty() && nas::read_genotype_file(opts.genotype_path) != net.genotype()) {
    throw InputError("genotype " + opts.genotype_path + " does not match the one stored in " + wpath);
  }
  const Splits data = load_splits(config, log);
  if (net.num_classes() != data.all_train.num_subjects()) {
    throw InputError(wpath + " has " + std::to_string(net.num_classes()) + " classes but the data has " +
                     std::to_string(data.all_train.num_subjects()) + " subjects");
  }
  const auto cfg = config.prune();
  const std::size_t before = net.parameter_count();
  {
    const data::Batch probe = entropy::probe_batch(data.all_train, cfg.probe_seed, cfg.probe_size);
    entropy::EntropyReport report = entropy::entropy_report(entropy::collect_trace(net, probe));
    report.probe_seed = cfg.probe_seed;
    auto out = open_out(dir + "/entropy_report.csv");
    entropy::write_entropy_csv(report, out);
  }
  auto result = entropy::tes_prune(std::move(net), data.search_train, data.search_val, cfg);
  for (const auto& s : result.log.steps) {
    log << "remove node " << s.node << " (TE " << fmt(s.te) << "): val_acc " << fmt(s.accuracy)
        << (s.accepted ? " accepted" : " rejected") << '\n';
  }
  nas::write_genotype_file(result.genotype, dir + "/genotype_pruned.txt");
  result.network.save_file(dir + "/weights_pruned.txt");
  auto out = open_out(dir + "/prune_log.txt");
  entropy::write_prune_log(result.log, out);
  log << "prune: " << result.log.removals() << " layer(s) removed (" << result.log.stop_reason << "), weights "
      << before << " -> " << result.network.parameter_count() << ", val_acc " << fmt(result.log.initial_accuracy)
      << " -> "
      << fmt(result.log.removals() == 0 ? result.log.initial_accuracy
                                        : result.log.steps[result.log.removals() - 1].accuracy)
      << '\n';
}

void cmd_eval(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
  const std::string dir = prepare_out(config, log);
  std::string wpath = opts.weights_path;
  if (wpath.empty()) wpath = fs::exists(dir + "/weights_pruned.txt") ? dir + "/weights_pruned.txt" : dir + "/weights.txt";
  const nas::Network net = nas::Network::load_file(wpath);
  const Splits data = load_splits(config, log);
  const auto emb = eval::extract_embeddings(net, data.test);
  const auto scores = eval::score_pairs(emb, config.max_impostor_pairs(), derive_seed(config.seed(), "eval"));
  const auto report = eval::make_report(scores);
  {
    auto out = open_out(dir + "/eval_report.txt");
    out << "weights " << wpath << '\n';
    eval::write_eval_report(report, out);
  }
  {
    auto out = open_out(dir + "/roc.csv");
    eval::write_roc_csv(report.curves, out);
  }
  {
    auto out = open_out(dir + "/pr.csv");
    eval::write_pr_csv(report.curves, out);
  }
  log << "eval: " << wpath << " on " << data.test.size() << " test windows, EER " << fmt(report.eer.eer)
      << " (genuine " << report.genuine_pairs << ", impostor " << report.impostor_pairs << " pairs), AP "
      << fmt(report.curves.average_precision) << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const FormatError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 4;
}

int run_command(const std::string& name, const RunConfig& config, const CommandOptions& opts, std::ostream& log,
                std::ostream& err) {
  try {
    if (name == "gen-data") {
      cmd_gen_data(config, log);
    } else if (name == "search") {
      cmd_search(config, opts, log);
    } else if (name == "train") {
      cmd_train(config, opts, log);
    } else if (name == "prune") {
      cmd_prune(config, opts, log);
    } else if (name == "eval") {
      cmd_eval(config, opts, log);
    } else {
      throw ConfigError("unknown command '" + name + "'");
    }
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    const char* kind = code == 1 ? "configuration error" : code == 2 ? "data error" : code == 3 ? "numerical error"
                                                                                                 : "internal error";
    err << "emdarts " << name << ": " << kind << ": " << e.what() << '\n';
    return code;
  }
  return 0;
}

}  // namespace emdarts::cli
