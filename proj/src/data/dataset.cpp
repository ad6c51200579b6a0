#include "emdarts/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "emdarts/error.hpp"
#include "emdarts/rng.hpp"

namespace emdarts::data {

Dataset make_dataset(std::vector<pre::FastSlowWindow> windows, const std::vector<std::string>& subjects) {
  Dataset d;
  d.subjects = subjects;
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (!index.emplace(subjects[i], static_cast<int>(i)).second) throw InputError("duplicate subject " + subjects[i]);
  }
  for (const auto& w : windows) {
    auto it = index.find(w.subject);
    if (it == index.end()) throw InputError("window of unknown subject " + w.subject);
    d.labels.push_back(it->second);
  }
  d.windows = std::move(windows);
  return d;
}

Dataset make_dataset(std::vector<pre::FastSlowWindow> windows) {
  std::vector<std::string> subjects;
  for (const auto& w : windows) {
    if (std::find(subjects.begin(), subjects.end(), w.subject) == subjects.end()) subjects.push_back(w.subject);
  }
  return make_dataset(std::move(windows), subjects);
}

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
  Dataset out;
  out.subjects = d.subjects;
  for (std::size_t i : indices) {
    out.windows.push_back(d.windows.at(i));
    out.labels.push_back(d.labels.at(i));
  }
  return out;
}

std::pair<std::vector<pre::GazeSequence>, std::vector<pre::GazeSequence>> hold_out_last_session(
    std::span<const pre::GazeSequence> sequences) {
  std::map<std::string, std::size_t> last;
  std::map<std::string, std::size_t> count;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    last[sequences[i].subject] = i;
    ++count[sequences[i].subject];
  }
  for (const auto& [subject, n] : count) {
    if (n < 2) throw InputError("subject " + subject + " has a single session; a test session needs at least 2");
  }
  std::pair<std::vector<pre::GazeSequence>, std::vector<pre::GazeSequence>> out;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    (last[sequences[i].subject] == i ? out.second : out.first).push_back(sequences[i]);
  }
  return out;
}

Dataset windows_from(std::span<const pre::GazeSequence> sequences, const pre::FastSlowParams& params,
                     const std::vector<std::string>& subjects) {
  std::vector<pre::FastSlowWindow> windows;
  for (const auto& s : sequences) {
    auto w = pre::preprocess(s, params);
    windows.insert(windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  if (windows.empty()) throw InputError("no complete windows in the data (sequences shorter than one window?)");
  if (subjects.empty()) {
    std::vector<std::string> order;
    for (const auto& s : sequences) {
      if (std::find(order.begin(), order.end(), s.subject) == order.end()) order.push_back(s.subject);
    }
    return make_dataset(std::move(windows), order);
  }
  return make_dataset(std::move(windows), subjects);
}

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.search_train_fraction > 0.0 && spec.search_train_fraction < 1.0)) {
    throw ConfigError("search_train_fraction must be in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> per_subject(d.num_subjects());
  for (std::size_t i = 0; i < d.size(); ++i) per_subject[static_cast<std::size_t>(d.labels[i])].push_back(i);
  Rng rng(derive_seed(spec.seed, "split"));
  std::vector<std::size_t> first, second;
  for (std::size_t s = 0; s < per_subject.size(); ++s) {
    auto& idx = per_subject[s];
    if (idx.size() < 2) {
      throw InputError("subject " + d.subjects[s] + " has " + std::to_string(idx.size()) +
                       " window(s); splitting needs at least 2");
    }
    rng.shuffle(std::span(idx));
    const double raw = std::floor(spec.search_train_fraction * static_cast<double>(idx.size()) + 1e-9);
    const std::size_t n_train = std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, idx.size() - 1);
    first.insert(first.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    second.insert(second.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {subset(d, first), subset(d, second)};
}

pre::FastSlowWindow occlude(const pre::FastSlowWindow& window, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("occlusion ratio must be in [0, 1)");
  pre::FastSlowWindow out = window;
  const std::size_t count = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(window.length)));
  std::vector<std::size_t> idx(window.length);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "occlude"));
  // Partial Fisher-Yates: the first `count` entries are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(window.length - i)]);
  const std::size_t channels = window.data.size() / window.length;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < channels; ++c) out.data[c * window.length + idx[i]] = 0.0;
  }
  return out;
}

const char* split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train:
      return "train";
    case SplitTag::Validation:
      return "validation";
    case SplitTag::Test:
      return "test";
    case SplitTag::Probe:
      return "probe";
  }
  return "?";
}

Batch make_batch(const Dataset& d, std::span<const std::size_t> indices, SplitTag tag) {
  if (indices.empty()) throw InputError("empty batch");
  const std::size_t len = d.window_length();
  Batch b;
  b.tag = tag;
  b.x = ad::Tensor({indices.size(), pre::kNumChannels, len});
  auto out = b.x.mutable_values();
  std::size_t k = 0;
  for (std::size_t i : indices) {
    const auto& w = d.windows.at(i);
    if (w.length != len || w.data.size() != pre::kNumChannels * len) throw InputError("windows differ in length");
    std::copy(w.data.begin(), w.data.end(), out.begin() + static_cast<std::ptrdiff_t>(k * pre::kNumChannels * len));
    b.labels.push_back(d.labels.at(i));
    b.indices.push_back(i);
    ++k;
  }
  return b;
}

Batcher::Batcher(const Dataset& d, std::size_t batch_size, SplitTag tag, std::uint64_t seed)
    : data_(&d), batch_size_(batch_size), tag_(tag), seed_(seed) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (d.size() == 0) throw InputError(std::string("empty ") + split_tag_name(tag) + " set");
}

std::size_t Batcher::batches_per_epoch() const { return (data_->size() + batch_size_ - 1) / batch_size_; }

std::vector<Batch> Batcher::epoch(std::size_t e) const {
  std::vector<std::size_t> order(data_->size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed_, "batching", e));
  rng.shuffle(std::span(order));
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size_) {
    const std::size_t stop = std::min(order.size(), start + batch_size_);
    out.push_back(make_batch(*data_, std::span(order).subspan(start, stop - start), tag_));
  }
  return out;
}

std::vector<Batch> Batcher::sequential() const {
  std::vector<std::size_t> order(data_->size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size_) {
    const std::size_t stop = std::min(order.size(), start + batch_size_);
    out.push_back(make_batch(*data_, std::span(order).subspan(start, stop - start), tag_));
  }
  return out;
}

}  // namespace emdarts::data
