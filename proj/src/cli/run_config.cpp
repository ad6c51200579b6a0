#include "emdarts/cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "emdarts/error.hpp"

namespace emdarts::cli {

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"seed", "1", "master seed; every random stream derives from it"},
      {"out_dir", "emdarts_out", "directory for all artifacts"},
      {"data.path", "", "gaze CSV (subject,session,t,x,y); empty means <out_dir>/gaze.csv"},
      {"synthetic.subjects", "8", "number of synthetic subjects"},
      {"synthetic.sessions", "3", "sessions per subject; the last one is the test session"},
      {"synthetic.seconds", "20", "seconds per session"},
      {"synthetic.sample_rate_hz", "100", "sampling rate of generated data"},
      {"synthetic.session_jitter", "0.03", "relative per-session perturbation of subject traits"},
      {"preprocess.v_min", "40", "fast-channel speed threshold, deg/s"},
      {"preprocess.c", "0.02", "slow-channel tanh scale"},
      {"split.search_train_fraction", "0.7", "per-subject share of windows used for weight steps during search"},
      {"supernet.nodes", "5", "global nodes M"},
      {"supernet.cell_nodes", "2", "intermediate nodes N per cell"},
      {"supernet.stem_channels", "8", "channels after the stem"},
      {"supernet.reduction_nodes", "default", "space-separated node list, 'default' or 'none'"},
      {"search.epochs", "10", "search epochs"},
      {"search.train_batch", "32", "training batch size during search"},
      {"search.val_batch", "128", "validation batch size during search"},
      {"search.w_lr_max", "0.025", "weight learning rate at the first epoch"},
      {"search.w_lr_min", "0.001", "weight learning rate floor of the cosine schedule"},
      {"search.w_momentum", "0.9", "weight SGD momentum"},
      {"search.w_weight_decay", "0.0005", "weight decay on weights"},
      {"search.arch_lr", "0.0003", "Adam learning rate for alpha and beta"},
      {"search.arch_weight_decay", "0.001", "weight decay on alpha and beta"},
      {"search.grad_clip", "5", "max L2 norm of weight gradients"},
      {"search.second_order", "false", "use the unrolled second-order architecture gradient"},
      {"search.share_alpha", "false", "share alpha across cells (normal/reduction blocks)"},
      {"train.epochs", "50", "final training epochs"},
      {"train.batch", "32", "final training batch size"},
      {"train.lr_max", "0.025", "initial learning rate"},
      {"train.lr_min", "0.001", "cosine schedule floor"},
      {"train.momentum", "0.9", "SGD momentum"},
      {"train.weight_decay", "0.0005", "weight decay"},
      {"train.grad_clip", "5", "max L2 norm of gradients"},
      {"train.drop_path_prob", "0.3", "drop-path probability reached at the last epoch"},
      {"prune.retrain_epochs", "10", "retraining epochs after each removal"},
      {"prune.probe_size", "1024", "max windows in the entropy probe batch"},
      {"eval.max_impostor_pairs", "1000000", "cap on sampled impostor pairs"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.key] = k.default_value;
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    try {
      cfg.set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in, path);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "' needs a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t RunConfig::integer(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' needs a nonnegative integer, got '" + s + "'");
  }
  return v;
}

bool RunConfig::boolean(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config key '" + key + "' needs true or false, got '" + s + "'");
}

std::uint64_t RunConfig::seed() const { return integer("seed"); }

std::string RunConfig::data_path() const {
  const std::string& p = get("data.path");
  return p.empty() ? out_dir() + "/gaze.csv" : p;
}

data::SyntheticConfig RunConfig::synthetic() const {
  data::SyntheticConfig c;
  c.num_subjects = integer("synthetic.subjects");
  c.sessions_per_subject = integer("synthetic.sessions");
  c.seconds_per_session = number("synthetic.seconds");
  c.sample_rate_hz = number("synthetic.sample_rate_hz");
  c.session_jitter = number("synthetic.session_jitter");
  c.seed = derive_seed(seed(), "data");
  c.validate();
  return c;
}

pre::FastSlowParams RunConfig::preprocess() const {
  pre::FastSlowParams p;
  p.v_min = number("preprocess.v_min");
  p.c = number("preprocess.c");
  if (!(p.v_min >= 0.0) || !(p.c > 0.0)) throw ConfigError("preprocess.v_min must be >= 0 and preprocess.c > 0");
  return p;
}

data::SplitSpec RunConfig::split() const {
  data::SplitSpec s;
  s.search_train_fraction = number("split.search_train_fraction");
  s.seed = derive_seed(seed(), "split");
  if (!(s.search_train_fraction > 0.0 && s.search_train_fraction < 1.0)) {
    throw ConfigError("split.search_train_fraction must be in (0, 1)");
  }
  return s;
}

nas::SupernetConfig RunConfig::supernet() const {
  nas::SupernetConfig c;
  c.nodes = integer("supernet.nodes");
  c.cell_nodes = integer("supernet.cell_nodes");
  c.stem_channels = integer("supernet.stem_channels");
  const std::string& r = get("supernet.reduction_nodes");
  if (r == "default") {
    c.reduction_nodes = nas::SupernetConfig::default_reduction_nodes(c.nodes);
  } else if (r == "none") {
    c.reduction_nodes.clear();
  } else {
    c.reduction_nodes.clear();
    std::istringstream in(r);
    std::string token;
    while (in >> token) {
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ConfigError("supernet.reduction_nodes: bad node '" + token + "'");
      }
      c.reduction_nodes.push_back(v);
    }
  }
  c.validate();
  return c;
}

search::SearchConfig RunConfig::search() const {
  search::SearchConfig c;
  c.epochs = integer("search.epochs");
  c.train_batch = integer("search.train_batch");
  c.val_batch = integer("search.val_batch");
  c.w_lr_max = number("search.w_lr_max");
  c.w_lr_min = number("search.w_lr_min");
  c.w_momentum = number("search.w_momentum");
  c.w_weight_decay = number("search.w_weight_decay");
  c.arch_lr = number("search.arch_lr");
  c.arch_weight_decay = number("search.arch_weight_decay");
  c.grad_clip = number("search.grad_clip");
  c.second_order = boolean("search.second_order");
  c.sharing = boolean("search.share_alpha") ? nas::AlphaSharing::Shared : nas::AlphaSharing::PerCell;
  c.seed = derive_seed(seed(), "search");
  c.validate();
  return c;
}

search::TrainConfig RunConfig::train() const {
  search::TrainConfig c;
  c.epochs = integer("train.epochs");
  c.batch_size = integer("train.batch");
  c.lr_max = number("train.lr_max");
  c.lr_min = number("train.lr_min");
  c.momentum = number("train.momentum");
  c.weight_decay = number("train.weight_decay");
  c.grad_clip = number("train.grad_clip");
  c.drop_path_prob = number("train.drop_path_prob");
  c.seed = derive_seed(seed(), "train");
  c.validate();
  return c;
}

entropy::PruneConfig RunConfig::prune() const {
  entropy::PruneConfig c;
  c.retrain = train();
  c.retrain.epochs = integer("prune.retrain_epochs");
  c.retrain.seed = derive_seed(seed(), "prune.retrain");
  c.probe_size = integer("prune.probe_size");
  if (c.probe_size == 0) throw ConfigError("prune.probe_size must be positive");
  c.probe_seed = derive_seed(seed(), "prune.probe");
  return c;
}

std::size_t RunConfig::max_impostor_pairs() const {
  const auto v = integer("eval.max_impostor_pairs");
  if (v == 0) throw ConfigError("eval.max_impostor_pairs must be positive");
  return v;
}

void RunConfig::write(std::ostream& out) const {
  for (const auto& k : config_keys()) {
    out << "# " << k.doc << '\n' << k.key << " = " << get(k.key) << '\n';
  }
}

}  // namespace emdarts::cli
