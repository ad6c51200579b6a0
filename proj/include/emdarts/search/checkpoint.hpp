#pragma once

#include <iosfwd>
#include <string>

#include "emdarts/search/search.hpp"

namespace emdarts::search {

// Exact text snapshot of a SearchState: counters, metric history, weights,
// BN statistics, architecture logits and all three optimizer states.
void save_checkpoint(const SearchState& s, std::ostream& out);
void save_checkpoint_file(const SearchState& s, const std::string& path);

// Loads into a state constructed with the same configurations.
void load_checkpoint(SearchState& s, std::istream& in);
void load_checkpoint_file(SearchState& s, const std::string& path);

}  // namespace emdarts::search
