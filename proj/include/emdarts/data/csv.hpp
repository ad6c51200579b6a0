#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "emdarts/preprocess/velocity.hpp"

namespace emdarts::data {

// Reads `subject,session,t,x,y` rows. Rows are grouped by (subject, session)
// in order of first appearance and sorted by t within a group. The sample rate
// is the inverse median step; a group whose rate differs from the first by
// more than 1% is rejected. Errors are FormatError with the line number.
std::vector<pre::GazeSequence> read_csv(std::istream& in, const std::string& source = "<stream>");
std::vector<pre::GazeSequence> load_csv(const std::string& path);

// Shortest round-trip number formatting, so write -> read is exact.
void write_csv(std::ostream& out, std::span<const pre::GazeSequence> sequences);
void save_csv(const std::string& path, std::span<const pre::GazeSequence> sequences);

}  // namespace emdarts::data
