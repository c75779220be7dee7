#include "hpix/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hpix/error.hpp"

namespace hpix::ag {

using Node = Var::Node;
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

using NodePtr = std::shared_ptr<Var::Node>;

// Upper bound on im2col scratch, in elements (16 MiB of doubles).
constexpr std::size_t kColumnBudget = std::size_t{1} << 21;

Tensor& grad_of(Var::Node& node) {
  if (node.grad.empty()) node.grad = Tensor(node.value().shape());
  return node.grad;
}

Var make_result(Tensor value, std::vector<NodePtr> inputs,
                std::function<void(Var::Node&)> backward) {
  auto node = std::make_shared<Var::Node>();
  node->owned = std::move(value);
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [](const NodePtr& p) {
    return p && p->requires_grad;
  });
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var::from_node(std::move(node));
}

// Sliding-window geometry between a "large" image and the grid of window
// positions over it. For conv2d the large image is the input; for the
// transposed conv it is the output.
struct PatchGeometry {
  int channels;
  int in_h, in_w;
  int kernel, stride, pad;
  int out_h, out_w;

  int rows() const { return channels * kernel * kernel; }
  int rows_per_chunk() const {
    const std::size_t per_row = static_cast<std::size_t>(rows()) * out_w;
    return static_cast<int>(std::max<std::size_t>(1, kColumnBudget / per_row));
  }
};

// Gathers window rows [r0, r1) into col: [C*k*k, (r1-r0)*out_w].
void im2col(const double* img, const PatchGeometry& g, int r0, int r1, double* col) {
  const int cols = (r1 - r0) * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    const double* src = img + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        double* dst = col + static_cast<std::size_t>((c * g.kernel + ki) * g.kernel + kj) * cols;
        for (int oh = r0; oh < r1; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          double* row = dst + static_cast<std::size_t>(oh - r0) * g.out_w;
          if (ih < 0 || ih >= g.in_h) {
            std::fill(row, row + g.out_w, 0.0);
            continue;
          }
          const double* line = src + static_cast<std::size_t>(ih) * g.in_w;
          for (int ow = 0; ow < g.out_w; ++ow) {
            const int iw = ow * g.stride - g.pad + kj;
            row[ow] = (iw >= 0 && iw < g.in_w) ? line[iw] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds window rows [r0, r1) back onto img.
void col2im_add(const double* col, const PatchGeometry& g, int r0, int r1, double* img) {
  const int cols = (r1 - r0) * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    double* dst = img + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        const double* src =
            col + static_cast<std::size_t>((c * g.kernel + ki) * g.kernel + kj) * cols;
        for (int oh = r0; oh < r1; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          if (ih < 0 || ih >= g.in_h) continue;
          const double* row = src + static_cast<std::size_t>(oh - r0) * g.out_w;
          double* line = dst + static_cast<std::size_t>(ih) * g.in_w;
          for (int ow = 0; ow < g.out_w; ++ow) {
            const int iw = ow * g.stride - g.pad + kj;
            if (iw >= 0 && iw < g.in_w) line[iw] += row[ow];
          }
        }
      }
    }
  }
}

void add_bias(Tensor& out, const Tensor& bias) {
  const Shape s = out.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      double* p = out.plane(n, c);
      const double b = bias.data()[c];
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] += b;
    }
  }
}

void accumulate_bias_grad(const Tensor& grad_out, Tensor& grad_bias) {
  const Shape s = grad_out.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* p = grad_out.plane(n, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) sum += p[i];
      grad_bias.data()[c] += sum;
    }
  }
}

void check_bias(const Var& bias, int channels, const char* op) {
  if (!bias.defined()) return;
  const Shape s = bias.shape();
  if (s.numel() != static_cast<std::size_t>(channels)) {
    throw ShapeError(std::string(op) + ": bias shape " + s.str() +
                     " does not match " + std::to_string(channels) + " channels");
  }
}

int reflect_index(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

// Linear interpolation taps for one axis of a factor-2 upsample.
struct Taps {
  std::vector<int> lo, hi;
  std::vector<double> w_hi;
};

Taps upsample_taps(int in) {
  const int out = 2 * in;
  Taps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.w_hi.resize(out);
  for (int o = 0; o < out; ++o) {
    const double src = std::max(0.0, (o + 0.5) * 0.5 - 0.5);
    const int lo = static_cast<int>(src);
    t.lo[o] = lo;
    t.hi[o] = lo + (lo < in - 1 ? 1 : 0);
    t.w_hi[o] = src - lo;
  }
  return t;
}

}  // namespace

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->owned = std::move(value);
  return from_node(std::move(node));
}

Var Var::borrowed_constant(const Tensor& value) {
  auto node = std::make_shared<Node>();
  node->borrowed = &value;
  return from_node(std::move(node));
}

Var Var::borrowed_parameter(const Tensor& value) {
  auto node = std::make_shared<Node>();
  node->borrowed = &value;
  node->requires_grad = true;
  return from_node(std::move(node));
}

Var Var::parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->owned = std::move(value);
  node->requires_grad = true;
  return from_node(std::move(node));
}

double Var::item() const {
  if (node_->value().size() != 1) {
    throw ShapeError("item() on non-scalar " + node_->value().shape().str());
  }
  return node_->value().data()[0];
}

void Var::backward() const {
  if (node_->value().size() != 1) {
    throw ShapeError("backward() requires a scalar, got " + node_->value().shape().str());
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; reversed it is a valid propagation order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->inputs.empty()) n->grad = Tensor();
  }
  grad_of(*node_).data()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

Var reflection_pad(const Var& x, int pad) {
  const Shape s = x.shape();
  if (pad < 0 || pad >= s.h || pad >= s.w) {
    throw ShapeError("reflection pad " + std::to_string(pad) + " too large for " + s.str());
  }
  if (pad == 0) return x;
  const Shape o{s.n, s.c, s.h + 2 * pad, s.w + 2 * pad};
  Tensor out(o);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = x.value().plane(n, c);
      double* dst = out.plane(n, c);
      for (int i = 0; i < o.h; ++i) {
        const int si = reflect_index(i - pad, s.h);
        for (int j = 0; j < o.w; ++j) {
          dst[i * o.w + j] = src[si * s.w + reflect_index(j - pad, s.w)];
        }
      }
    }
  }
  return make_result(std::move(out), {x.node()}, [pad](Node& self) {
    Node& in = *self.inputs[0];
    const Shape s = in.value().shape();
    const Shape o = self.value().shape();
    Tensor& gx = grad_of(in);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const double* g = self.grad.plane(n, c);
        double* dst = gx.plane(n, c);
        for (int i = 0; i < o.h; ++i) {
          const int si = reflect_index(i - pad, s.h);
          for (int j = 0; j < o.w; ++j) {
            dst[si * s.w + reflect_index(j - pad, s.w)] += g[i * o.w + j];
          }
        }
      }
    }
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.h != ws.w || ws.c != xs.c) {
    throw ShapeError("conv2d: weight " + ws.str() + " incompatible with input " + xs.str());
  }
  check_bias(bias, ws.n, "conv2d");
  const int k = ws.h;
  const int out_h = (xs.h + 2 * pad - k) / stride + 1;
  const int out_w = (xs.w + 2 * pad - k) / stride + 1;
  if (xs.h + 2 * pad < k || xs.w + 2 * pad < k) {
    throw ShapeError("conv2d: input " + xs.str() + " smaller than kernel " + std::to_string(k));
  }
  const PatchGeometry g{xs.c, xs.h, xs.w, k, stride, pad, out_h, out_w};
  const int cout = ws.n;
  Tensor out(Shape{xs.n, cout, out_h, out_w});

  const Eigen::Map<const RowMat> wm(weight.value().data(), cout, g.rows());
  const int chunk = g.rows_per_chunk();
  RowMat col;
  for (int n = 0; n < xs.n; ++n) {
    for (int r0 = 0; r0 < out_h; r0 += chunk) {
      const int r1 = std::min(out_h, r0 + chunk);
      const int cols = (r1 - r0) * out_w;
      col.resize(g.rows(), cols);
      im2col(x.value().plane(n, 0), g, r0, r1, col.data());
      StridedMap dst(out.plane(n, 0) + static_cast<std::size_t>(r0) * out_w, cout, cols,
                     Eigen::OuterStride<>(out_h * out_w));
      dst.noalias() = wm * col;
    }
  }
  if (bias.defined()) add_bias(out, bias.value());

  std::vector<NodePtr> inputs{x.node(), weight.node()};
  if (bias.defined()) inputs.push_back(bias.node());
  return make_result(std::move(out), std::move(inputs), [g](Node& self) {
    Node& xin = *self.inputs[0];
    Node& win = *self.inputs[1];
    const int batch = xin.value().shape().n;
    const int cout = win.value().shape().n;
    const Eigen::Map<const RowMat> wm(win.value().data(), cout, g.rows());
    const int chunk = g.rows_per_chunk();
    RowMat col;
    RowMat dcol;
    for (int n = 0; n < batch; ++n) {
      for (int r0 = 0; r0 < g.out_h; r0 += chunk) {
        const int r1 = std::min(g.out_h, r0 + chunk);
        const int cols = (r1 - r0) * g.out_w;
        const ConstStridedMap dout(
            self.grad.plane(n, 0) + static_cast<std::size_t>(r0) * g.out_w, cout, cols,
            Eigen::OuterStride<>(g.out_h * g.out_w));
        if (win.requires_grad) {
          col.resize(g.rows(), cols);
          im2col(xin.value().plane(n, 0), g, r0, r1, col.data());
          Eigen::Map<RowMat> dw(grad_of(win).data(), cout, g.rows());
          dw.noalias() += dout * col.transpose();
        }
        if (xin.requires_grad) {
          dcol.noalias() = wm.transpose() * dout;
          col2im_add(dcol.data(), g, r0, r1, grad_of(xin).plane(n, 0));
        }
      }
    }
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      accumulate_bias_grad(self.grad, grad_of(*self.inputs[2]));
    }
  });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride,
                     int pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws.h != ws.w || ws.n != xs.c) {
    throw ShapeError("conv_transpose2d: weight " + ws.str() + " incompatible with input " +
                     xs.str());
  }
  check_bias(bias, ws.c, "conv_transpose2d");
  const int k = ws.h;
  const int cout = ws.c;
  const int out_h = (xs.h - 1) * stride - 2 * pad + k;
  const int out_w = (xs.w - 1) * stride - 2 * pad + k;
  if (out_h <= 0 || out_w <= 0) {
    throw ShapeError("conv_transpose2d: empty output for input " + xs.str());
  }
  // The transposed conv is the adjoint of a conv whose input is our output.
  const PatchGeometry g{cout, out_h, out_w, k, stride, pad, xs.h, xs.w};
  Tensor out(Shape{xs.n, cout, out_h, out_w});

  const Eigen::Map<const RowMat> wt(weight.value().data(), xs.c, g.rows());
  const int chunk = g.rows_per_chunk();
  RowMat col;
  for (int n = 0; n < xs.n; ++n) {
    for (int r0 = 0; r0 < xs.h; r0 += chunk) {
      const int r1 = std::min(xs.h, r0 + chunk);
      const int cols = (r1 - r0) * xs.w;
      const ConstStridedMap src(x.value().plane(n, 0) + static_cast<std::size_t>(r0) * xs.w,
                                xs.c, cols, Eigen::OuterStride<>(xs.h * xs.w));
      col.noalias() = wt.transpose() * src;
      col2im_add(col.data(), g, r0, r1, out.plane(n, 0));
    }
  }
  if (bias.defined()) add_bias(out, bias.value());

  std::vector<NodePtr> inputs{x.node(), weight.node()};
  if (bias.defined()) inputs.push_back(bias.node());
  return make_result(std::move(out), std::move(inputs), [g](Node& self) {
    Node& xin = *self.inputs[0];
    Node& win = *self.inputs[1];
    const Shape xs = xin.value().shape();
    const Eigen::Map<const RowMat> wt(win.value().data(), xs.c, g.rows());
    const int chunk = g.rows_per_chunk();
    RowMat col;
    for (int n = 0; n < xs.n; ++n) {
      for (int r0 = 0; r0 < xs.h; r0 += chunk) {
        const int r1 = std::min(xs.h, r0 + chunk);
        const int cols = (r1 - r0) * xs.w;
        col.resize(g.rows(), cols);
        im2col(self.grad.plane(n, 0), g, r0, r1, col.data());
        if (xin.requires_grad) {
          StridedMap dx(grad_of(xin).plane(n, 0) + static_cast<std::size_t>(r0) * xs.w, xs.c,
                        cols, Eigen::OuterStride<>(xs.h * xs.w));
          dx.noalias() += wt * col;
        }
        if (win.requires_grad) {
          const ConstStridedMap src(xin.value().plane(n, 0) + static_cast<std::size_t>(r0) * xs.w,
                                    xs.c, cols, Eigen::OuterStride<>(xs.h * xs.w));
          Eigen::Map<RowMat> dw(grad_of(win).data(), xs.c, g.rows());
          dw.noalias() += src * col.transpose();
        }
      }
    }
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      accumulate_bias_grad(self.grad, grad_of(*self.inputs[2]));
    }
  });
}

Var instance_norm(const Var& x, const Var& scale, const Var& shift, double eps) {
  const Shape s = x.shape();
  if (scale.shape().numel() != static_cast<std::size_t>(s.c) ||
      shift.shape().numel() != static_cast<std::size_t>(s.c)) {
    throw ShapeError("instance_norm: affine parameters do not match " + s.str());
  }
  const std::size_t m = s.plane();
  auto normalized = std::make_shared<Tensor>(s);
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.n) * s.c);
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* p = x.value().plane(n, c);
      double mean = 0.0;
      for (std::size_t i = 0; i < m; ++i) mean += p[i];
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) var += (p[i] - mean) * (p[i] - mean);
      var /= static_cast<double>(m);
      const double istd = 1.0 / std::sqrt(var + eps);
      (*inv_std)[static_cast<std::size_t>(n) * s.c + c] = istd;
      const double gamma = scale.value().data()[c];
      const double beta = shift.value().data()[c];
      double* xh = normalized->plane(n, c);
      double* o = out.plane(n, c);
      for (std::size_t i = 0; i < m; ++i) {
        xh[i] = (p[i] - mean) * istd;
        o[i] = gamma * xh[i] + beta;
      }
    }
  }
  return make_result(
      std::move(out), {x.node(), scale.node(), shift.node()},
      [normalized, inv_std](Node& self) {
        Node& xin = *self.inputs[0];
        Node& gin = *self.inputs[1];
        Node& bin = *self.inputs[2];
        const Shape s = xin.value().shape();
        const std::size_t m = s.plane();
        const double md = static_cast<double>(m);
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            const double* dy = self.grad.plane(n, c);
            const double* xh = normalized->plane(n, c);
            double sum_dy = 0.0;
            double sum_dy_xh = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
              sum_dy += dy[i];
              sum_dy_xh += dy[i] * xh[i];
            }
            if (bin.requires_grad) grad_of(bin).data()[c] += sum_dy;
            if (gin.requires_grad) grad_of(gin).data()[c] += sum_dy_xh;
            if (xin.requires_grad) {
              const double gamma = gin.value().data()[c];
              const double istd = (*inv_std)[static_cast<std::size_t>(n) * s.c + c];
              double* dx = grad_of(xin).plane(n, c);
              const double k = gamma * istd / md;
              for (std::size_t i = 0; i < m; ++i) {
                dx[i] += k * (md * dy[i] - sum_dy - xh[i] * sum_dy_xh);
              }
            }
          }
        }
      });
}

Var leaky_relu(const Var& x, double slope) {
  Tensor out(x.shape());
  const auto in = x.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = in[i] > 0.0 ? in[i] : slope * in[i];
  return make_result(std::move(out), {x.node()}, [slope](Node& self) {
    Node& xin = *self.inputs[0];
    const auto in = xin.value().values();
    const auto g = self.grad.values();
    auto dx = grad_of(xin).values();
    for (std::size_t i = 0; i < in.size(); ++i) dx[i] += in[i] > 0.0 ? g[i] : slope * g[i];
  });
}

Var tanh(const Var& x) {
  Tensor out(x.shape());
  const auto in = x.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = std::tanh(in[i]);
  return make_result(std::move(out), {x.node()}, [](Node& self) {
    const auto y = self.value().values();
    const auto g = self.grad.values();
    auto dx = grad_of(*self.inputs[0]).values();
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var dropout(const Var& x, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout probability must lie in [0, 1)");
  if (p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution keep(1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.value().size());
  Tensor out(x.shape());
  const auto in = x.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    (*mask)[i] = keep(rng) ? keep_scale : 0.0;
    o[i] = in[i] * (*mask)[i];
  }
  return make_result(std::move(out), {x.node()}, [mask](Node& self) {
    const auto g = self.grad.values();
    auto dx = grad_of(*self.inputs[0]).values();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (*mask)[i];
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape first = parts.front().shape();
  Shape o{first.n, 0, first.h, first.w};
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat: " + s.str() + " does not match " + first.str());
    }
    o.c += s.c;
  }
  Tensor out(o);
  std::vector<NodePtr> inputs;
  for (int n = 0; n < o.n; ++n) {
    int c0 = 0;
    for (const auto& p : parts) {
      const Shape s = p.shape();
      std::copy_n(p.value().plane(n, 0), static_cast<std::size_t>(s.c) * s.plane(),
                  out.plane(n, c0));
      c0 += s.c;
    }
  }
  for (const auto& p : parts) inputs.push_back(p.node());
  return make_result(std::move(out), std::move(inputs), [](Node& self) {
    const Shape o = self.value().shape();
    for (int n = 0; n < o.n; ++n) {
      int c0 = 0;
      for (auto& in : self.inputs) {
        const Shape s = in->value().shape();
        if (in->requires_grad) {
          const double* g = self.grad.plane(n, c0);
          double* dx = grad_of(*in).plane(n, 0);
          const std::size_t len = static_cast<std::size_t>(s.c) * s.plane();
          for (std::size_t i = 0; i < len; ++i) dx[i] += g[i];
        }
        c0 += s.c;
      }
    }
  });
}

Var upsample_bilinear2x(const Var& x) {
  const Shape s = x.shape();
  const Shape o{s.n, s.c, 2 * s.h, 2 * s.w};
  auto ty = std::make_shared<Taps>(upsample_taps(s.h));
  auto tx = std::make_shared<Taps>(upsample_taps(s.w));
  Tensor out(o);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* src = x.value().plane(n, c);
      double* dst = out.plane(n, c);
      for (int i = 0; i < o.h; ++i) {
        const double wy = ty->w_hi[i];
        const double* a = src + static_cast<std::size_t>(ty->lo[i]) * s.w;
        const double* b = src + static_cast<std::size_t>(ty->hi[i]) * s.w;
        for (int j = 0; j < o.w; ++j) {
          const double wx = tx->w_hi[j];
          const double top = (1.0 - wx) * a[tx->lo[j]] + wx * a[tx->hi[j]];
          const double bot = (1.0 - wx) * b[tx->lo[j]] + wx * b[tx->hi[j]];
          dst[static_cast<std::size_t>(i) * o.w + j] = (1.0 - wy) * top + wy * bot;
        }
      }
    }
  }
  return make_result(std::move(out), {x.node()}, [ty, tx](Node& self) {
    Node& xin = *self.inputs[0];
    const Shape s = xin.value().shape();
    const Shape o = self.value().shape();
    Tensor& gx = grad_of(xin);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const double* g = self.grad.plane(n, c);
        double* dst = gx.plane(n, c);
        for (int i = 0; i < o.h; ++i) {
          const double wy = ty->w_hi[i];
          double* a = dst + static_cast<std::size_t>(ty->lo[i]) * s.w;
          double* b = dst + static_cast<std::size_t>(ty->hi[i]) * s.w;
          for (int j = 0; j < o.w; ++j) {
            const double v = g[static_cast<std::size_t>(i) * o.w + j];
            const double wx = tx->w_hi[j];
            a[tx->lo[j]] += (1.0 - wy) * (1.0 - wx) * v;
            a[tx->hi[j]] += (1.0 - wy) * wx * v;
            b[tx->lo[j]] += wy * (1.0 - wx) * v;
            b[tx->hi[j]] += wy * wx * v;
          }
        }
      }
    }
  });
}

Var l1_loss(const Var& pred, const Var& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("l1_loss: " + pred.shape().str() + " vs " + target.shape().str());
  }
  const auto p = pred.value().values();
  const auto t = target.value().values();
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - t[i]);
  const double count = static_cast<double>(p.size());
  Tensor out(Shape{1, 1, 1, 1}, sum / count);
  return make_result(std::move(out), {pred.node(), target.node()}, [count](Node& self) {
    const double g = self.grad.data()[0] / count;
    Node& pn = *self.inputs[0];
    Node& tn = *self.inputs[1];
    const auto p = pn.value().values();
    const auto t = tn.value().values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p[i] - t[i];
      const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (pn.requires_grad) grad_of(pn).data()[i] += g * sgn;
      if (tn.requires_grad) grad_of(tn).data()[i] -= g * sgn;
    }
  });
}

Var bce_with_logits(const Var& logits, double target) {
  const auto z = logits.value().values();
  double sum = 0.0;
  for (double v : z) {
    if (!std::isfinite(v)) throw NumericError("non-finite discriminator logit");
    sum += std::max(v, 0.0) - v * target + std::log1p(std::exp(-std::abs(v)));
  }
  const double count = static_cast<double>(z.size());
  Tensor out(Shape{1, 1, 1, 1}, sum / count);
  return make_result(std::move(out), {logits.node()}, [count, target](Node& self) {
    const double g = self.grad.data()[0] / count;
    Node& zn = *self.inputs[0];
    const auto z = zn.value().values();
    auto dz = grad_of(zn).values();
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double sig = z[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-z[i]))
                                     : std::exp(z[i]) / (1.0 + std::exp(z[i]));
      dz[i] += g * (sig - target);
    }
  });
}

Var add(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + a.shape().str() + " vs " + b.shape().str());
  }
  Tensor out(a.shape());
  const auto av = a.value().values();
  const auto bv = b.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    const auto g = self.grad.values();
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto d = grad_of(*in).values();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out(a.shape());
  const auto av = a.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * factor;
  return make_result(std::move(out), {a.node()}, [factor](Node& self) {
    const auto g = self.grad.values();
    auto d = grad_of(*self.inputs[0]).values();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * factor;
  });
}

}  // namespace hpix::ag
