#include "emdarts/data/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "emdarts/error.hpp"

namespace emdarts::data {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::string& source, std::size_t line, const char* column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw FormatError(source + ":" + std::to_string(line) + ": column '" + column + "' is not a number: '" + cell + "'");
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

double median_step(const std::vector<double>& t) {
  std::vector<double> steps(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) steps[i - 1] = t[i] - t[i - 1];
  std::sort(steps.begin(), steps.end());
  const std::size_t m = steps.size() / 2;
  return steps.size() % 2 == 1 ? steps[m] : 0.5 * (steps[m - 1] + steps[m]);
}

}  // namespace

std::vector<pre::GazeSequence> read_csv(std::istream& in, const std::string& source) {
  static constexpr const char* kColumns[] = {"subject", "session", "t", "x", "y"};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError(source + ": empty file, expected header subject,session,t,x,y");
  ++line_no;
  const auto header = split_fields(line);
  for (const char* col : kColumns) {
    if (std::find(header.begin(), header.end(), col) == header.end()) {
      throw FormatError(source + ":1: missing column '" + col + "'");
    }
  }
  std::size_t idx[5];
  for (std::size_t c = 0; c < 5; ++c) {
    idx[c] = static_cast<std::size_t>(std::find(header.begin(), header.end(), kColumns[c]) - header.begin());
  }

  struct Row {
    double t, x, y;
    std::size_t line;
  };
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<Row>> groups;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    const std::pair key{fields[idx[0]], fields[idx[1]]};
    if (key.first.empty()) throw FormatError(source + ":" + std::to_string(line_no) + ": empty subject");
    Row row{parse_number(fields[idx[2]], source, line_no, "t"), parse_number(fields[idx[3]], source, line_no, "x"),
            parse_number(fields[idx[4]], source, line_no, "y"), line_no};
    if (!std::isfinite(row.t)) throw FormatError(source + ":" + std::to_string(line_no) + ": non-finite timestamp");
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(row);
  }

  std::vector<pre::GazeSequence> out;
  for (const auto& key : order) {
    auto& rows = groups[key];
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    pre::GazeSequence seq;
    seq.subject = key.first;
    seq.session = key.second;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].t == rows[i - 1].t) {
        throw FormatError(source + ":" + std::to_string(rows[i].line) + ": duplicate timestamp in " + key.first + "/" +
                          key.second);
      }
      seq.t.push_back(rows[i].t);
      seq.x.push_back(rows[i].x);
      seq.y.push_back(rows[i].y);
    }
    if (seq.t.size() < 2) {
      throw FormatError(source + ": sequence " + key.first + "/" + key.second + " has fewer than 2 samples");
    }
    seq.sample_rate_hz = 1.0 / median_step(seq.t);
    if (!out.empty()) {
      const double ref = out.front().sample_rate_hz;
      if (std::fabs(seq.sample_rate_hz - ref) > 0.01 * ref) {
        throw FormatError(source + ": sequence " + key.first + "/" + key.second + " sampled at " +
                          format_number(seq.sample_rate_hz) + " Hz, file started at " + format_number(ref) + " Hz");
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<pre::GazeSequence> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file " + path);
  return read_csv(in, path);
}

void write_csv(std::ostream& out, std::span<const pre::GazeSequence> sequences) {
  out << "subject,session,t,x,y\n";
  for (const auto& s : sequences) {
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      out << s.subject << ',' << s.session << ',' << format_number(s.t[i]) << ',' << format_number(s.x[i]) << ','
          << format_number(s.y[i]) << '\n';
    }
  }
}

void save_csv(const std::string& path, std::span<const pre::GazeSequence> sequences) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  write_csv(out, sequences);
  if (!out) throw InputError("failed writing " + path);
}

}  // namespace emdarts::data
