#pragma once

#include "emdarts/autodiff/param_store.hpp"
#include "emdarts/supernet/global_edge.hpp"

namespace emdarts::nas {

// What training and evaluation loops need from a network.
class Model {
 public:
  virtual ~Model() = default;
  virtual ForwardResult forward(const Tensor& x, const ops::ForwardContext& ctx) const = 0;
  virtual ad::ParamStore& weights() = 0;
  virtual const ad::ParamStore& weights() const = 0;
};

}  // namespace emdarts::nas
