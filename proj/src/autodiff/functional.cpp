#include "emdarts/autodiff/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "emdarts/error.hpp"

namespace emdarts::ad {

namespace {

using NodePtr = std::shared_ptr<TensorNode>;

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

bool tracking(std::span<const Tensor> inputs) {
  if (active_tape() == nullptr) return false;
  for (const Tensor& t : inputs) {
    if (t.defined() && t.requires_grad()) return true;
  }
  return false;
}

Tensor make_output(Shape shape, std::vector<double> values, bool track) {
  Tensor out(std::move(shape), std::move(values));
  if (track) {
    out.node()->requires_grad = true;
    out.node()->leaf = false;
  }
  return out;
}

// Gradient buffer of an input, or nullptr if it does not need one.
double* grad_buffer(const NodePtr& node) {
  if (!node || !node->requires_grad) return nullptr;
  return node->ensure_grad().data();
}

void record(const Tensor& out, Tape::Adjoint adjoint) { active_tape()->record(out.node(), std::move(adjoint)); }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

}  // namespace

Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const bool track = tracking({&a, &b});
  std::vector<double> v(a.numel());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] + bv[i];
  Tensor out = make_output(a.shape(), std::move(v), track);
  if (track) {
    record(out, [an = a.node(), bn = b.node(), on = out.node().get()] {
      for (const NodePtr& n : {an, bn}) {
        if (double* g = grad_buffer(n)) {
          for (std::size_t i = 0; i < on->grad.size(); ++i) g[i] += on->grad[i];
        }
      }
    });
  }
  return out;
}

Tensor add_n(std::span<const Tensor> terms) {
  if (terms.empty()) throw DimensionError("add_n: no terms");
  for (const Tensor& t : terms) require_same_shape(terms[0], t, "add_n");
  if (terms.size() == 1) return terms[0];
  const bool track = tracking(terms);
  std::vector<double> v(terms[0].numel(), 0.0);
  for (const Tensor& t : terms) {
    auto tv = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += tv[i];
  }
  Tensor out = make_output(terms[0].shape(), std::move(v), track);
  if (track) {
    std::vector<NodePtr> nodes;
    for (const Tensor& t : terms) nodes.push_back(t.node());
    record(out, [nodes = std::move(nodes), on = out.node().get()] {
      for (const NodePtr& n : nodes) {
        if (double* g = grad_buffer(n)) {
          for (std::size_t i = 0; i < on->grad.size(); ++i) g[i] += on->grad[i];
        }
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const bool track = tracking({&a, &b});
  std::vector<double> v(a.numel());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = av[i] * bv[i];
  Tensor out = make_output(a.shape(), std::move(v), track);
  if (track) {
    record(out, [an = a.node(), bn = b.node(), on = out.node().get()] {
      const auto& go = on->grad;
      if (double* g = grad_buffer(an)) {
        for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * bn->value[i];
      }
      if (double* g = grad_buffer(bn)) {
        for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * an->value[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  const bool track = tracking({&a});
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x *= factor;
  Tensor out = make_output(a.shape(), std::move(v), track);
  if (track) {
    record(out, [an = a.node(), on = out.node().get(), factor] {
      if (double* g = grad_buffer(an)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) g[i] += factor * on->grad[i];
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  const bool track = tracking({&a});
  double s = 0.0;
  for (double x : a.values()) s += x;
  Tensor out = make_output(Shape{1}, {s}, track);
  if (track) {
    record(out, [an = a.node(), on = out.node().get()] {
      if (double* g = grad_buffer(an)) {
        const double go = on->grad[0];
        for (std::size_t i = 0; i < an->value.size(); ++i) g[i] += go;
      }
    });
  }
  return out;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor relu(const Tensor& x) {
  const bool track = tracking({&x});
  std::vector<double> v(x.values().begin(), x.values().end());
  for (double& e : v) e = e > 0.0 ? e : 0.0;
  Tensor out = make_output(x.shape(), std::move(v), track);
  if (track) {
    record(out, [xn = x.node(), on = out.node().get()] {
      if (double* g = grad_buffer(xn)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
          if (xn->value[i] > 0.0) g[i] += on->grad[i];
        }
      }
    });
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  const bool track = tracking({&x});
  std::vector<double> v(x.values().begin(), x.values().end());
  for (double& e : v) e = std::tanh(e);
  Tensor out = make_output(x.shape(), std::move(v), track);
  if (track) {
    record(out, [xn = x.node(), on = out.node().get()] {
      if (double* g = grad_buffer(xn)) {
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
          const double y = on->value[i];
          g[i] += on->grad[i] * (1.0 - y * y);
        }
      }
    });
  }
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " + shape_string(shape));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t len = shape[axis];
  const bool track = tracking({&x});
  auto xv = x.values();
  std::vector<double> y(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < len; ++k) peak = std::max(peak, xv[base + k * inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const double e = std::exp(xv[base + k * inner] - peak);
        y[base + k * inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < len; ++k) y[base + k * inner] /= total;
    }
  }
  Tensor out = make_output(shape, std::move(y), track);
  if (track) {
    record(out, [xn = x.node(), on = out.node().get(), outer, inner, len] {
      double* g = grad_buffer(xn);
      if (!g) return;
      const auto& yv = on->value;
      const auto& gy = on->grad;
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * len * inner + in;
          double dot = 0.0;
          for (std::size_t k = 0; k < len; ++k) dot += gy[base + k * inner] * yv[base + k * inner];
          for (std::size_t k = 0; k < len; ++k) {
            const std::size_t i = base + k * inner;
            g[i] += yv[i] * (gy[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const std::size_t n = x.dim(0), d = x.dim(1), k = weight.dim(0);
  if (weight.dim(1) != d) {
    throw DimensionError("linear: input width " + std::to_string(d) + " does not match weight " +
                         shape_string(weight.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{k}) {
    throw DimensionError("linear: bias shape " + shape_string(bias.shape()) + " does not match " +
                         std::to_string(k) + " outputs");
  }
  const bool track = tracking({&x, &weight, &bias});
  auto xv = x.values();
  auto wv = weight.values();
  std::vector<double> y(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < k; ++o) {
      double acc = bias.defined() ? bias.values()[o] : 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += xv[i * d + j] * wv[o * d + j];
      y[i * k + o] = acc;
    }
  }
  Tensor out = make_output(Shape{n, k}, std::move(y), track);
  if (track) {
    record(out, [xn = x.node(), wn = weight.node(), bn = bias.node(), on = out.node().get(), n, d, k] {
      const auto& gy = on->grad;
      double* gx = grad_buffer(xn);
      double* gw = grad_buffer(wn);
      double* gb = grad_buffer(bn);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < k; ++o) {
          const double go = gy[i * k + o];
          if (gb) gb[o] += go;
          for (std::size_t j = 0; j < d; ++j) {
            if (gx) gx[i * d + j] += go * wn->value[o * d + j];
            if (gw) gw[o * d + j] += go * xn->value[i * d + j];
          }
        }
      }
    });
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 3, "global_avg_pool");
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2);
  const bool track = tracking({&x});
  auto xv = x.values();
  std::vector<double> y(n * c);
  for (std::size_t r = 0; r < n * c; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t; ++i) acc += xv[r * t + i];
    y[r] = acc / static_cast<double>(t);
  }
  Tensor out = make_output(Shape{n, c}, std::move(y), track);
  if (track) {
    record(out, [xn = x.node(), on = out.node().get(), n, c, t] {
      double* g = grad_buffer(xn);
      if (!g) return;
      const double inv = 1.0 / static_cast<double>(t);
      for (std::size_t r = 0; r < n * c; ++r) {
        const double go = on->grad[r] * inv;
        for (std::size_t i = 0; i < t; ++i) g[r * t + i] += go;
      }
    });
  }
  return out;
}

namespace {

// Valid output range [lo, hi) for a tap reading input index t * stride + offset.
void tap_range(std::ptrdiff_t offset, std::size_t stride, std::size_t t_in, std::size_t t_out, std::size_t& lo,
               std::size_t& hi) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto len = static_cast<std::ptrdiff_t>(t_in);
  std::ptrdiff_t first = offset < 0 ? (-offset + s - 1) / s : 0;
  std::ptrdiff_t last_index = len - 1 - offset;  // largest t * s allowed
  std::ptrdiff_t end = last_index < 0 ? 0 : last_index / s + 1;
  end = std::min<std::ptrdiff_t>(end, static_cast<std::ptrdiff_t>(t_out));
  lo = static_cast<std::size_t>(first);
  hi = static_cast<std::size_t>(std::max(end, first));
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& weight, const Conv1dOptions& opt) {
  require_rank(x, 3, "conv1d");
  require_rank(weight, 3, "conv1d weight");
  if (opt.stride == 0 || opt.dilation == 0 || opt.groups == 0) {
    throw ConfigError("conv1d: stride, dilation and groups must be positive");
  }
  const std::size_t n = x.dim(0), c_in = x.dim(1), t_in = x.dim(2);
  const std::size_t c_out = weight.dim(0), k = weight.dim(2);
  const std::size_t groups = opt.groups;
  if (c_in % groups != 0 || c_out % groups != 0) {
    throw DimensionError("conv1d: channels " + std::to_string(c_in) + "->" + std::to_string(c_out) +
                         " not divisible by groups " + std::to_string(groups));
  }
  const std::size_t cin_g = c_in / groups, cout_g = c_out / groups;
  if (weight.dim(1) != cin_g) {
    throw DimensionError("conv1d: weight " + shape_string(weight.shape()) + " incompatible with input " +
                         shape_string(x.shape()) + " and groups " + std::to_string(groups));
  }
  if (k % 2 == 0) throw ConfigError("conv1d: kernel length must be odd, got " + std::to_string(k));
  const auto span = static_cast<std::ptrdiff_t>(t_in + 2 * opt.padding) -
                    static_cast<std::ptrdiff_t>(opt.dilation * (k - 1)) - 1;
  if (span < 0) {
    throw ConfigError("conv1d: zero-length output for input length " + std::to_string(t_in));
  }
  const std::size_t t_out = static_cast<std::size_t>(span) / opt.stride + 1;
  const bool track = tracking({&x, &weight});
  const double* xv = x.values().data();
  const double* wv = weight.values().data();
  std::vector<double> y(n * c_out * t_out, 0.0);
  const std::size_t s = opt.stride;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      const std::size_t g = co / cout_g;
      double* yrow = y.data() + (b * c_out + co) * t_out;
      for (std::size_t cl = 0; cl < cin_g; ++cl) {
        const double* xrow = xv + (b * c_in + g * cin_g + cl) * t_in;
        const double* wrow = wv + (co * cin_g + cl) * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk * opt.dilation) -
                                     static_cast<std::ptrdiff_t>(opt.padding);
          std::size_t lo, hi;
          tap_range(off, s, t_in, t_out, lo, hi);
          const double wk = wrow[kk];
          if (s == 1) {
            const double* __restrict src = xrow + off;
            double* __restrict dst = yrow;
            for (std::size_t t = lo; t < hi; ++t) dst[t] += wk * src[t];
          } else {
            for (std::size_t t = lo; t < hi; ++t) yrow[t] += wk * xrow[static_cast<std::ptrdiff_t>(t * s) + off];
          }
        }
      }
    }
  }
  Tensor out = make_output(Shape{n, c_out, t_out}, std::move(y), track);
  if (track) {
    record(out, [xn = x.node(), wn = weight.node(), on = out.node().get(), n, c_in, t_in, c_out, k, cin_g, cout_g,
                 t_out, opt] {
      double* gx = grad_buffer(xn);
      double* gw = grad_buffer(wn);
      const double* gy = on->grad.data();
      const double* xv = xn->value.data();
      const double* wv = wn->value.data();
      const std::size_t s = opt.stride;
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t co = 0; co < c_out; ++co) {
          const std::size_t g = co / cout_g;
          const double* grow = gy + (b * c_out + co) * t_out;
          for (std::size_t cl = 0; cl < cin_g; ++cl) {
            const std::size_t xoff = (b * c_in + g * cin_g + cl) * t_in;
            const std::size_t woff = (co * cin_g + cl) * k;
            for (std::size_t kk = 0; kk < k; ++kk) {
              const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk * opt.dilation) -
                                         static_cast<std::ptrdiff_t>(opt.padding);
              std::size_t lo, hi;
              tap_range(off, s, t_in, t_out, lo, hi);
              if (gx) {
                const double wk = wv[woff + kk];
                double* gxrow = gx + xoff;
                if (s == 1) {
                  double* __restrict dst = gxrow + off;
                  const double* __restrict src = grow;
                  for (std::size_t t = lo; t < hi; ++t) dst[t] += wk * src[t];
                } else {
                  for (std::size_t t = lo; t < hi; ++t) gxrow[static_cast<std::ptrdiff_t>(t * s) + off] += wk * grow[t];
                }
              }
              if (gw) {
                const double* xrow = xv + xoff;
                // four independent partial sums so the loop pipelines
                double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                std::size_t t = lo;
                if (s == 1) {
                  const double* xs = xrow + off;
                  for (; t + 4 <= hi; t += 4) {
                    a0 += grow[t] * xs[t];
                    a1 += grow[t + 1] * xs[t + 1];
                    a2 += grow[t + 2] * xs[t + 2];
                    a3 += grow[t + 3] * xs[t + 3];
                  }
                }
                for (; t < hi; ++t) a0 += grow[t] * xrow[static_cast<std::ptrdiff_t>(t * s) + off];
                gw[woff + kk] += (a0 + a1) + (a2 + a3);
              }
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor pool1d(const Tensor& x, const Pool1dOptions& opt) {
  require_rank(x, 3, "pool1d");
  if (opt.window == 0 || opt.stride == 0) throw ConfigError("pool1d: window and stride must be positive");
  const std::size_t n = x.dim(0), c = x.dim(1), t_in = x.dim(2);
  const auto span = static_cast<std::ptrdiff_t>(t_in + 2 * opt.padding) - static_cast<std::ptrdiff_t>(opt.window);
  if (span < 0) throw ConfigError("pool1d: window longer than padded input");
  const std::size_t t_out = static_cast<std::size_t>(span) / opt.stride + 1;
  const bool track = tracking({&x});
  const bool is_max = opt.kind == PoolKind::Max;
  auto xv = x.values();
  std::vector<double> y(n * c * t_out);
  // Max: argmax input index per output. Avg: number of real samples.
  std::vector<std::size_t> aux(n * c * t_out);
  for (std::size_t r = 0; r < n * c; ++r) {
    const double* row = xv.data() + r * t_in;
    for (std::size_t t = 0; t < t_out; ++t) {
      const auto start = static_cast<std::ptrdiff_t>(t * opt.stride) - static_cast<std::ptrdiff_t>(opt.padding);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(start, 0);
      const std::ptrdiff_t hi =
          std::min<std::ptrdiff_t>(start + static_cast<std::ptrdiff_t>(opt.window), static_cast<std::ptrdiff_t>(t_in));
      if (hi <= lo) throw ConfigError("pool1d: empty pooling window at output " + std::to_string(t));
      const std::size_t o = r * t_out + t;
      if (is_max) {
        std::ptrdiff_t best = lo;
        for (std::ptrdiff_t i = lo + 1; i < hi; ++i) {
          if (row[i] > row[best]) best = i;
        }
        y[o] = row[best];
        aux[o] = static_cast<std::size_t>(best);
      } else {
        double acc = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i) acc += row[i];
        aux[o] = static_cast<std::size_t>(hi - lo);
        y[o] = acc / static_cast<double>(aux[o]);
      }
    }
  }
  Tensor out = make_output(Shape{n, c, t_out}, std::move(y), track);
  if (track) {
    record(out, [xn = x.node(), on = out.node().get(), aux = std::move(aux), n, c, t_in, t_out, opt, is_max] {
      double* g = grad_buffer(xn);
      if (!g) return;
      for (std::size_t r = 0; r < n * c; ++r) {
        double* grow = g + r * t_in;
        for (std::size_t t = 0; t < t_out; ++t) {
          const std::size_t o = r * t_out + t;
          const double go = on->grad[o];
          if (is_max) {
            grow[aux[o]] += go;
          } else {
            const auto start =
                static_cast<std::ptrdiff_t>(t * opt.stride) - static_cast<std::ptrdiff_t>(opt.padding);
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(start, 0);
            const std::ptrdiff_t hi = lo + static_cast<std::ptrdiff_t>(aux[o]);
            const double share = go / static_cast<double>(aux[o]);
            for (std::ptrdiff_t i = lo; i < hi; ++i) grow[i] += share;
          }
        }
      }
    });
  }
  return out;
}

Tensor batch_norm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                    Tensor& running_var, const BatchNormOptions& opt) {
  require_rank(x, 3, "batch_norm1d");
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2);
  for (const Tensor* p : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var}) {
    if (p->shape() != Shape{c}) {
      throw DimensionError("batch_norm1d: parameter shape " + shape_string(p->shape()) + " does not match " +
                           std::to_string(c) + " channels");
    }
  }
  const std::size_t count = n * t;
  if (opt.training && count < 2) throw InputError("batch_norm1d: training mode needs N*T >= 2");
  const bool track = tracking({&x, &gamma, &beta});
  auto xv = x.values();
  auto gv = gamma.values();
  auto bv = beta.values();
  std::vector<double> mu(c), inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (opt.training) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* row = xv.data() + (b * c + ch) * t;
        for (std::size_t i = 0; i < t; ++i) acc += row[i];
      }
      const double m = acc / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* row = xv.data() + (b * c + ch) * t;
        for (std::size_t i = 0; i < t; ++i) sq += (row[i] - m) * (row[i] - m);
      }
      const double var = sq / static_cast<double>(count);
      mu[ch] = m;
      inv_std[ch] = 1.0 / std::sqrt(var + opt.eps);
      if (opt.update_running_stats) {
        auto rm = running_mean.mutable_values();
        auto rv = running_var.mutable_values();
        const double unbiased = sq / static_cast<double>(count - 1);
        rm[ch] = (1.0 - opt.momentum) * rm[ch] + opt.momentum * m;
        rv[ch] = (1.0 - opt.momentum) * rv[ch] + opt.momentum * unbiased;
      }
    } else {
      mu[ch] = running_mean.values()[ch];
      inv_std[ch] = 1.0 / std::sqrt(running_var.values()[ch] + opt.eps);
    }
  }
  std::vector<double> y(xv.size());
  std::vector<double> xhat(track ? xv.size() : 0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (b * c + ch) * t;
      for (std::size_t i = 0; i < t; ++i) {
        const double h = (xv[base + i] - mu[ch]) * inv_std[ch];
        if (track) xhat[base + i] = h;
        y[base + i] = gv[ch] * h + bv[ch];
      }
    }
  }
  Tensor out = make_output(x.shape(), std::move(y), track);
  if (track) {
    record(out, [xn = x.node(), gn = gamma.node(), bn = beta.node(), on = out.node().get(), xhat = std::move(xhat),
                 inv_std = std::move(inv_std), n, c, t, training = opt.training] {
      const auto& gy = on->grad;
      double* gx = grad_buffer(xn);
      double* gg = grad_buffer(gn);
      double* gb = grad_buffer(bn);
      const double inv_count = 1.0 / static_cast<double>(n * t);
      for (std::size_t ch = 0; ch < c; ++ch) {
        double sum_g = 0.0, sum_gh = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
          const std::size_t base = (b * c + ch) * t;
          for (std::size_t i = 0; i < t; ++i) {
            sum_g += gy[base + i];
            sum_gh += gy[base + i] * xhat[base + i];
          }
        }
        if (gg) gg[ch] += sum_gh;
        if (gb) gb[ch] += sum_g;
        if (!gx) continue;
        const double scale_c = gn->value[ch] * inv_std[ch];
        const double mean_g = sum_g * inv_count, mean_gh = sum_gh * inv_count;
        for (std::size_t b = 0; b < n; ++b) {
          const std::size_t base = (b * c + ch) * t;
          for (std::size_t i = 0; i < t; ++i) {
            const double gi = gy[base + i];
            gx[base + i] += training ? scale_c * (gi - mean_g - xhat[base + i] * mean_gh) : scale_c * gi;
          }
        }
      }
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                         " rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw InputError("cross_entropy: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " outside [0, " + std::to_string(k) + ")");
    }
  }
  const bool track = tracking({&logits});
  auto lv = logits.values();
  std::vector<double> probs(n * k);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = lv.data() + i * k;
    const double peak = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(row[j] - peak);
    const double log_total = std::log(total) + peak;
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] = std::exp(row[j] - log_total);
    loss += log_total - row[labels[i]];
  }
  loss /= static_cast<double>(n);
  Tensor out = make_output(Shape{1}, {loss}, track);
  if (track) {
    std::vector<int> label_copy(labels.begin(), labels.end());
    record(out, [ln = logits.node(), on = out.node().get(), probs = std::move(probs), label_copy = std::move(label_copy),
                 n, k] {
      double* g = grad_buffer(ln);
      if (!g) return;
      const double go = on->grad[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double target = static_cast<int>(j) == label_copy[i] ? 1.0 : 0.0;
          g[i * k + j] += go * (probs[i * k + j] - target);
        }
      }
    });
  }
  return out;
}

Tensor weighted_sum(const Tensor& weights, std::span<const Tensor> candidates) {
  require_rank(weights, 1, "weighted_sum");
  if (weights.dim(0) != candidates.size()) {
    throw DimensionError("weighted_sum: " + std::to_string(weights.dim(0)) + " weights for " +
                         std::to_string(candidates.size()) + " candidates");
  }
  const Tensor* reference = nullptr;
  for (const Tensor& c : candidates) {
    if (!c.defined()) continue;
    if (!reference) {
      reference = &c;
    } else if (c.shape() != reference->shape()) {
      throw DimensionError("weighted_sum: candidate shapes diverge: " + shape_string(reference->shape()) + " vs " +
                           shape_string(c.shape()));
    }
  }
  if (!reference) throw DimensionError("weighted_sum: every candidate is empty");
  bool track = tracking({&weights}) || tracking(candidates);
  auto wv = weights.values();
  std::vector<double> y(reference->numel(), 0.0);
  for (std::size_t e = 0; e < candidates.size(); ++e) {
    if (!candidates[e].defined()) continue;
    auto cv = candidates[e].values();
    const double w = wv[e];
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += w * cv[i];
  }
  Tensor out = make_output(reference->shape(), std::move(y), track);
  if (track) {
    std::vector<NodePtr> nodes;
    for (const Tensor& c : candidates) nodes.push_back(c.node());
    record(out, [wn = weights.node(), nodes = std::move(nodes), on = out.node().get()] {
      const auto& gy = on->grad;
      double* gw = grad_buffer(wn);
      for (std::size_t e = 0; e < nodes.size(); ++e) {
        if (!nodes[e]) continue;
        const auto& cv = nodes[e]->value;
        if (gw) {
          double dot = 0.0;
          for (std::size_t i = 0; i < gy.size(); ++i) dot += gy[i] * cv[i];
          gw[e] += dot;
        }
        if (double* gc = grad_buffer(nodes[e])) {
          const double w = wn->value[e];
          for (std::size_t i = 0; i < gy.size(); ++i) gc[i] += w * gy[i];
        }
      }
    });
  }
  return out;
}

Tensor select_row(const Tensor& x, std::size_t row) {
  require_rank(x, 2, "select_row");
  if (row >= x.dim(0)) throw DimensionError("select_row: row " + std::to_string(row) + " out of range");
  const std::size_t k = x.dim(1);
  const bool track = tracking({&x});
  auto xv = x.values();
  std::vector<double> y(xv.begin() + static_cast<std::ptrdiff_t>(row * k),
                        xv.begin() + static_cast<std::ptrdiff_t>((row + 1) * k));
  Tensor out = make_output(Shape{k}, std::move(y), track);
  if (track) {
    record(out, [xn = x.node(), on = out.node().get(), row, k] {
      if (double* g = grad_buffer(xn)) {
        for (std::size_t j = 0; j < k; ++j) g[row * k + j] += on->grad[j];
      }
    });
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  for (const Tensor& p : parts) require_rank(p, 3, "concat_channels");
  const std::size_t n = parts[0].dim(0), t = parts[0].dim(2);
  std::size_t c_total = 0;
  for (const Tensor& p : parts) {
    if (p.dim(0) != n || p.dim(2) != t) {
      throw DimensionError("concat_channels: incompatible shapes " + shape_string(parts[0].shape()) + " and " +
                           shape_string(p.shape()));
    }
    c_total += p.dim(1);
  }
  const bool track = tracking(parts);
  std::vector<double> y(n * c_total * t);
  std::size_t c_off = 0;
  for (const Tensor& p : parts) {
    const std::size_t c = p.dim(1);
    auto pv = p.values();
    for (std::size_t b = 0; b < n; ++b) {
      std::copy_n(pv.data() + b * c * t, c * t, y.data() + (b * c_total + c_off) * t);
    }
    c_off += c;
  }
  Tensor out = make_output(Shape{n, c_total, t}, std::move(y), track);
  if (track) {
    std::vector<NodePtr> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    record(out, [nodes = std::move(nodes), on = out.node().get(), n, c_total, t] {
      std::size_t c_off = 0;
      for (const NodePtr& node : nodes) {
        const std::size_t c = node->shape[1];
        if (double* g = grad_buffer(node)) {
          for (std::size_t b = 0; b < n; ++b) {
            const double* src = on->grad.data() + (b * c_total + c_off) * t;
            double* dst = g + b * c * t;
            for (std::size_t i = 0; i < c * t; ++i) dst[i] += src[i];
          }
        }
        c_off += c;
      }
    });
  }
  return out;
}

Tensor shift_time(const Tensor& x, std::size_t offset) {
  require_rank(x, 3, "shift_time");
  const std::size_t rows = x.dim(0) * x.dim(1), t = x.dim(2);
  const bool track = tracking({&x});
  auto xv = x.values();
  std::vector<double> y(xv.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i + offset < t; ++i) y[r * t + i] = xv[r * t + i + offset];
  }
  Tensor out = make_output(x.shape(), std::move(y), track);
  if (track) {
    record(out, [xn = x.node(), on = out.node().get(), rows, t, offset] {
      if (double* g = grad_buffer(xn)) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i + offset < t; ++i) g[r * t + i + offset] += on->grad[r * t + i];
        }
      }
    });
  }
  return out;
}

Tensor scale_samples(const Tensor& x, std::span<const double> factors) {
  if (factors.size() != x.dim(0)) throw DimensionError("scale_samples: one factor per sample required");
  const std::size_t per = x.numel() / x.dim(0);
  const bool track = tracking({&x});
  std::vector<double> y(x.values().begin(), x.values().end());
  for (std::size_t b = 0; b < factors.size(); ++b) {
    for (std::size_t i = 0; i < per; ++i) y[b * per + i] *= factors[b];
  }
  Tensor out = make_output(x.shape(), std::move(y), track);
  if (track) {
    std::vector<double> f(factors.begin(), factors.end());
    record(out, [xn = x.node(), on = out.node().get(), f = std::move(f), per] {
      if (double* g = grad_buffer(xn)) {
        for (std::size_t b = 0; b < f.size(); ++b) {
          for (std::size_t i = 0; i < per; ++i) g[b * per + i] += f[b] * on->grad[b * per + i];
        }
      }
    });
  }
  return out;
}

}  // namespace emdarts::ad
