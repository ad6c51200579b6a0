#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "emdarts/autodiff/tensor.hpp"

namespace emdarts::ad {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Ordered registry of named tensors. Learnable parameters are leaves with
// requires_grad; buffers (BatchNorm running statistics) are not.
class ParamStore {
 public:
  Tensor add_parameter(const std::string& name, Tensor value);
  Tensor add_buffer(const std::string& name, Tensor value);

  const std::vector<NamedTensor>& parameters() const { return params_; }
  const std::vector<NamedTensor>& buffers() const { return buffers_; }

  // Number of learnable scalars.
  std::size_t parameter_count() const;

  bool contains(const std::string& name) const;
  Tensor find(const std::string& name) const;

  // Copies values of every same-named, same-shaped parameter and buffer from
  // `other`. Returns how many tensors were copied.
  std::size_t copy_matching_from(const ParamStore& other);

  // Exact text serialization (hex floats). load() requires every stored name
  // to exist with the same shape.
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  std::vector<NamedTensor> params_;
  std::vector<NamedTensor> buffers_;
  std::map<std::string, Tensor> index_;
};

// Shared helpers for the hex-float text encoding used by checkpoint files.
void write_tensor_record(std::ostream& out, const std::string& kind, const std::string& name, const Tensor& t);
std::string format_exact(double value);
double parse_exact(const std::string& token);

}  // namespace emdarts::ad
