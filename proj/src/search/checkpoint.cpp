#include "emdarts/search/checkpoint.hpp"

#include <fstream>

#include "emdarts/autodiff/param_store.hpp"
#include "emdarts/error.hpp"

namespace emdarts::search {

namespace {

constexpr const char* kHeader = "emdarts-search-checkpoint v1";

void write_epoch(std::ostream& out, const SearchEpoch& e) {
  out << e.epoch << ' ' << ad::format_exact(e.train_loss) << ' ' << ad::format_exact(e.val_loss) << ' '
      << ad::format_exact(e.val_acc) << ' ' << ad::format_exact(e.lr) << '\n';
}

SearchEpoch read_epoch(std::istream& in) {
  SearchEpoch e;
  std::string a, b, c, d;
  if (!(in >> e.epoch >> a >> b >> c >> d)) throw FormatError("checkpoint: truncated metrics");
  e.train_loss = ad::parse_exact(a);
  e.val_loss = ad::parse_exact(b);
  e.val_acc = ad::parse_exact(c);
  e.lr = ad::parse_exact(d);
  return e;
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw FormatError("checkpoint: expected '" + word + "', got '" + got + "'");
}

}  // namespace

void save_checkpoint(const SearchState& s, std::ostream& out) {
  out << kHeader << '\n';
  out << "epoch " << s.epoch << '\n';
  out << "steps " << s.alpha_steps << ' ' << s.beta_steps << ' ' << s.w_steps << '\n';
  out << "initial ";
  write_epoch(out, s.initial);
  out << "history " << s.history.size() << '\n';
  for (const auto& e : s.history) write_epoch(out, e);
  out << "weights\n";
  s.net.weights().save(out);
  const auto arch = s.net.arch_parameters();
  out << "arch " << arch.size() << '\n';
  for (const auto& p : arch) ad::write_tensor_record(out, "param", p.name, p.tensor);
  s.w_opt.save(out);
  s.alpha_opt.save(out);
  s.beta_opt.save(out);
}

void save_checkpoint_file(const SearchState& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  save_checkpoint(s, out);
  if (!out) throw InputError("failed writing " + path);
}

void load_checkpoint(SearchState& s, std::istream& in) {
  std::string line;
  while (line.empty() && std::getline(in, line)) {
  }
  if (line != kHeader) throw FormatError(std::string("checkpoint: missing '") + kHeader + "' header");
  expect(in, "epoch");
  if (!(in >> s.epoch)) throw FormatError("checkpoint: bad epoch");
  expect(in, "steps");
  if (!(in >> s.alpha_steps >> s.beta_steps >> s.w_steps)) throw FormatError("checkpoint: bad step counters");
  expect(in, "initial");
  s.initial = read_epoch(in);
  expect(in, "history");
  std::size_t n = 0;
  if (!(in >> n)) throw FormatError("checkpoint: bad history length");
  s.history.clear();
  for (std::size_t i = 0; i < n; ++i) s.history.push_back(read_epoch(in));
  if (s.history.size() != s.epoch) throw FormatError("checkpoint: history length differs from epoch counter");
  expect(in, "weights");
  s.net.weights().load(in);
  expect(in, "arch");
  const auto arch = s.net.arch_parameters();
  if (!(in >> n) || n != arch.size()) throw FormatError("checkpoint: architecture block count mismatch");
  for (const auto& p : arch) {
    std::string kind, name;
    std::size_t rank = 0;
    if (!(in >> kind >> name >> rank) || name != p.name) throw FormatError("checkpoint: expected '" + p.name + "'");
    ad::Shape shape(rank);
    for (auto& d : shape) in >> d;
    if (shape != p.tensor.shape()) throw FormatError("checkpoint: shape mismatch for '" + p.name + "'");
    auto v = ad::Tensor(p.tensor).mutable_values();
    for (double& x : v) {
      std::string token;
      if (!(in >> token)) throw FormatError("checkpoint: truncated '" + p.name + "'");
      x = ad::parse_exact(token);
    }
  }
  s.w_opt.load(in);
  s.alpha_opt.load(in);
  s.beta_opt.load(in);
}

void load_checkpoint_file(SearchState& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint " + path);
  load_checkpoint(s, in);
}

}  // namespace emdarts::search
