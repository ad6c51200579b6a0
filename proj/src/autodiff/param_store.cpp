#include "emdarts/autodiff/param_store.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "emdarts/error.hpp"

namespace emdarts::ad {

Tensor ParamStore::add_parameter(const std::string& name, Tensor value) {
  if (index_.count(name)) throw StateError("duplicate tensor name '" + name + "'");
  value.set_requires_grad(true);
  params_.push_back({name, value});
  index_.emplace(name, value);
  return value;
}

Tensor ParamStore::add_buffer(const std::string& name, Tensor value) {
  if (index_.count(name)) throw StateError("duplicate tensor name '" + name + "'");
  buffers_.push_back({name, value});
  index_.emplace(name, value);
  return value;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

bool ParamStore::contains(const std::string& name) const { return index_.count(name) > 0; }

Tensor ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw StateError("no tensor named '" + name + "'");
  return it->second;
}

std::size_t ParamStore::copy_matching_from(const ParamStore& other) {
  std::size_t copied = 0;
  for (auto& [name, tensor] : index_) {
    auto it = other.index_.find(name);
    if (it == other.index_.end() || it->second.shape() != tensor.shape()) continue;
    auto src = it->second.values();
    auto dst = tensor.mutable_values();
    std::copy(src.begin(), src.end(), dst.begin());
    ++copied;
  }
  return copied;
}

std::string format_exact(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", value);
  return buf;
}

double parse_exact(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw FormatError("not a number: '" + token + "'");
  return v;
}

void write_tensor_record(std::ostream& out, const std::string& kind, const std::string& name, const Tensor& t) {
  out << kind << ' ' << name << ' ' << t.rank();
  for (std::size_t d : t.shape()) out << ' ' << d;
  out << '\n';
  for (std::size_t i = 0; i < t.numel(); ++i) {
    out << format_exact(t.values()[i]) << (i + 1 == t.numel() ? '\n' : ' ');
  }
}

void ParamStore::save(std::ostream& out) const {
  out << "tensors " << params_.size() + buffers_.size() << '\n';
  for (const auto& p : params_) write_tensor_record(out, "param", p.name, p.tensor);
  for (const auto& b : buffers_) write_tensor_record(out, "buffer", b.name, b.tensor);
}

void ParamStore::load(std::istream& in) {
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "tensors") throw FormatError("expected 'tensors <count>' header");
  for (std::size_t r = 0; r < count; ++r) {
    std::string kind, name;
    std::size_t rank = 0;
    if (!(in >> kind >> name >> rank)) throw FormatError("truncated tensor record");
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(in >> d)) throw FormatError("truncated shape for '" + name + "'");
    }
    auto it = index_.find(name);
    if (it == index_.end()) throw FormatError("unknown tensor '" + name + "' in file");
    if (it->second.shape() != shape) {
      throw FormatError("shape mismatch for '" + name + "': file " + shape_string(shape) + ", model " +
                        shape_string(it->second.shape()));
    }
    auto dst = it->second.mutable_values();
    for (auto& v : dst) {
      std::string token;
      if (!(in >> token)) throw FormatError("truncated values for '" + name + "'");
      v = parse_exact(token);
    }
  }
}

}  // namespace emdarts::ad
