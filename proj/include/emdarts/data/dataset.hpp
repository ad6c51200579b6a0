#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emdarts/autodiff/tensor.hpp"
#include "emdarts/preprocess/velocity.hpp"

namespace emdarts::data {

// Windows with class labels. labels[i] indexes subjects.
struct Dataset {
  std::vector<pre::FastSlowWindow> windows;
  std::vector<int> labels;
  std::vector<std::string> subjects;  // label -> subject id

  std::size_t size() const { return windows.size(); }
  std::size_t num_subjects() const { return subjects.size(); }
  std::size_t window_length() const { return windows.empty() ? 0 : windows.front().length; }
};

// Labels follow the given subject order; windows of unknown subjects are an InputError.
Dataset make_dataset(std::vector<pre::FastSlowWindow> windows, const std::vector<std::string>& subjects);
// Labels follow order of first appearance.
Dataset make_dataset(std::vector<pre::FastSlowWindow> windows);

Dataset subset(const Dataset& d, std::span<const std::size_t> indices);

// Sequences of each subject's last session (in input order) form the test
// part. Every subject needs at least two sessions.
std::pair<std::vector<pre::GazeSequence>, std::vector<pre::GazeSequence>> hold_out_last_session(
    std::span<const pre::GazeSequence> sequences);

// Windows from every sequence, labelled by subject in order of first appearance
// unless `subjects` is given.
Dataset windows_from(std::span<const pre::GazeSequence> sequences, const pre::FastSlowParams& params,
                     const std::vector<std::string>& subjects = {});

struct SplitSpec {
  double search_train_fraction = 0.7;
  std::uint64_t seed = 0;
};

// Per-subject stratified split: floor(f * n) windows to the first part, the
// rest (at least one) to the second. Subjects with fewer than 2 windows are
// an InputError naming the subject.
std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec);

// Zeroes round(ratio * T) distinct time indices on all 4 channels.
pre::FastSlowWindow occlude(const pre::FastSlowWindow& window, double ratio, std::uint64_t seed);

enum class SplitTag { Train, Validation, Test, Probe };

const char* split_tag_name(SplitTag tag);

struct Batch {
  ad::Tensor x;  // [B, 4, T]
  std::vector<int> labels;
  std::vector<std::size_t> indices;  // rows of the source dataset
  SplitTag tag = SplitTag::Train;

  std::size_t size() const { return labels.size(); }
};

Batch make_batch(const Dataset& d, std::span<const std::size_t> indices, SplitTag tag);

// Per-epoch shuffled mini-batches. Epoch e's order depends only on (seed, e).
class Batcher {
 public:
  Batcher(const Dataset& d, std::size_t batch_size, SplitTag tag, std::uint64_t seed);

  std::size_t batches_per_epoch() const;
  std::vector<Batch> epoch(std::size_t e) const;
  // All windows in dataset order, chunked; for evaluation.
  std::vector<Batch> sequential() const;

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  SplitTag tag_;
  std::uint64_t seed_;
};

}  // namespace emdarts::data
