#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emdarts/autodiff/param_store.hpp"

namespace emdarts::ad {

enum class OptimizerKind { MomentumSgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::MomentumSgd;
  double learning_rate = 0.025;
  double momentum = 0.0;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Steps a fixed set of parameters using their current gradients (a missing
// gradient counts as zero).
//   momentum-SGD: v <- mu*v + g + wd*p;  p <- p - lr*v
//   Adam:         g' = g + wd*p, bias-corrected moments, step counter from 1
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::vector<NamedTensor> params);

  void step();
  void zero_grad();

  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  double learning_rate() const { return config_.learning_rate; }
  std::int64_t step_count() const { return steps_; }
  const std::vector<NamedTensor>& params() const { return params_; }
  const OptimizerConfig& config() const { return config_; }

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  OptimizerConfig config_;
  std::vector<NamedTensor> params_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::int64_t steps_ = 0;
};

// lr_min + 0.5 (lr_max - lr_min) (1 + cos(pi e / E)).
double cosine_learning_rate(double lr_max, double lr_min, int epoch, int total_epochs);

// Rescales gradients so their joint L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(const std::vector<NamedTensor>& params, double max_norm);

// Throws NumericalError naming the first parameter with a non-finite gradient.
void check_finite_grads(const std::vector<NamedTensor>& params, const std::string& context);

}  // namespace emdarts::ad
