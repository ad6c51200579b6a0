#include "emdarts/autodiff/optimizer.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "emdarts/error.hpp"

namespace emdarts::ad {

Optimizer::Optimizer(OptimizerConfig config, std::vector<NamedTensor> params)
    : config_(config), params_(std::move(params)) {
  if (!(config_.learning_rate >= 0.0)) throw ConfigError("optimizer learning rate must be non-negative");
  if (config_.momentum < 0.0 || config_.momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (config_.weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
  for (const auto& p : params_) {
    first_.emplace_back(p.tensor.numel(), 0.0);
    if (config_.kind == OptimizerKind::Adam) second_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Optimizer::step() {
  check_finite_grads(params_, "optimizer step");
  ++steps_;
  const double lr = config_.learning_rate;
  const double wd = config_.weight_decay;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k].tensor;
    auto values = p.mutable_values();
    const bool has_grad = p.has_grad();
    auto& m = first_[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = (has_grad ? p.grad()[i] : 0.0) + wd * values[i];
      if (config_.kind == OptimizerKind::MomentumSgd) {
        m[i] = config_.momentum * m[i] + g;
        values[i] -= lr * m[i];
      } else {
        auto& v = second_[k];
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        values[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
      }
    }
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void Optimizer::save(std::ostream& out) const {
  out << "optimizer " << steps_ << ' ' << format_exact(config_.learning_rate) << ' ' << params_.size() << '\n';
  for (std::size_t k = 0; k < params_.size(); ++k) {
    out << params_[k].name;
    for (double x : first_[k]) out << ' ' << format_exact(x);
    out << '\n';
    if (config_.kind == OptimizerKind::Adam) {
      out << params_[k].name;
      for (double x : second_[k]) out << ' ' << format_exact(x);
      out << '\n';
    }
  }
}

void Optimizer::load(std::istream& in) {
  std::string word, lr;
  std::size_t count = 0;
  if (!(in >> word >> steps_ >> lr >> count) || word != "optimizer") throw FormatError("expected optimizer header");
  config_.learning_rate = parse_exact(lr);
  if (count != params_.size()) throw FormatError("optimizer parameter count mismatch");
  auto read_row = [&](std::vector<double>& row, const std::string& expect) {
    std::string name;
    if (!(in >> name) || name != expect) throw FormatError("optimizer state out of order at '" + expect + "'");
    for (double& x : row) {
      std::string token;
      if (!(in >> token)) throw FormatError("truncated optimizer state");
      x = parse_exact(token);
    }
  };
  for (std::size_t k = 0; k < params_.size(); ++k) {
    read_row(first_[k], params_[k].name);
    if (config_.kind == OptimizerKind::Adam) read_row(second_[k], params_[k].name);
  }
}

double cosine_learning_rate(double lr_max, double lr_min, int epoch, int total_epochs) {
  if (total_epochs <= 0) return lr_max;
  const double phase = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

double clip_grad_norm(const std::vector<NamedTensor>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (const auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      Tensor t = p.tensor;
      for (double& g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

void check_finite_grads(const std::vector<NamedTensor>& params, const std::string& context) {
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw NumericalError(context + ": non-finite gradient in parameter '" + p.name + "'");
    }
  }
}

}  // namespace emdarts::ad
