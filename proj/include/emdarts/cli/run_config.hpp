#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "emdarts/data/dataset.hpp"
#include "emdarts/data/synthetic.hpp"
#include "emdarts/entropy/prune.hpp"
#include "emdarts/preprocess/velocity.hpp"
#include "emdarts/search/search.hpp"
#include "emdarts/search/train.hpp"
#include "emdarts/supernet/geometry.hpp"

namespace emdarts::cli {

struct KeySpec {
  const char* key;
  const char* default_value;
  const char* doc;
};

// Every accepted key with its default, in echo order.
const std::vector<KeySpec>& config_keys();

// Flat key = value settings; '#' starts a comment. Unknown keys and
// malformed values are ConfigError.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(std::istream& in, const std::string& source = "<config>");
  static RunConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  std::uint64_t seed() const;
  std::string out_dir() const { return get("out_dir"); }
  // data.path, or <out_dir>/gaze.csv when empty.
  std::string data_path() const;

  data::SyntheticConfig synthetic() const;
  pre::FastSlowParams preprocess() const;
  data::SplitSpec split() const;
  // num_classes left at its default; callers set it from the data.
  nas::SupernetConfig supernet() const;
  search::SearchConfig search() const;
  search::TrainConfig train() const;
  entropy::PruneConfig prune() const;
  std::size_t max_impostor_pairs() const;

  // Every key in config_keys() order; feeding the output back reproduces the config.
  void write(std::ostream& out) const;

 private:
  double number(const std::string& key) const;
  std::uint64_t integer(const std::string& key) const;
  bool boolean(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

}  // namespace emdarts::cli
