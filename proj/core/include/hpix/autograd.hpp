#pragma once

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "hpix/tensor.hpp"

// Reverse-mode differentiation over NCHW tensors.
//
// Every op returns a Var that owns its forward value. When none of an op's
// inputs requires a gradient the op records nothing, so inference-only graphs
// release intermediates as soon as the last Var referencing them dies.
namespace hpix::ag {

class Var {
 public:
  struct Node {
    Tensor owned;
    // Non-owning view of a tensor that outlives the graph (bound parameters).
    const Tensor* borrowed = nullptr;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;

    const Tensor& value() const { return borrowed != nullptr ? *borrowed : owned; }
  };

  Var() = default;

  // Leaf that never receives a gradient.
  static Var constant(Tensor value);
  // Leaf whose gradient accumulates across backward() calls.
  static Var parameter(Tensor value);
  // Leaves over caller-owned storage; `value` must outlive every Var derived
  // from the result.
  static Var borrowed_constant(const Tensor& value);
  static Var borrowed_parameter(const Tensor& value);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value(); }
  const Shape& shape() const { return node_->value().shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  // Accumulated gradient; empty until a backward pass reaches this Var.
  const Tensor& grad() const { return node_->grad; }
  void zero_grad() const { node_->grad = Tensor(); }

  // Single element of a 1x1x1x1 value.
  double item() const;

  // Same value, cut from the graph.
  Var detach() const { return constant(node_->value()); }

  // Seeds d(this)/d(this) = 1 and propagates to every reachable Var.
  // Intermediate gradients are reset first, leaf gradients accumulate.
  void backward() const;

  static Var from_node(std::shared_ptr<Node> node) {
    Var v;
    v.node_ = std::move(node);
    return v;
  }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

enum class Padding { zero, reflect };

// Reflection padding (mirror without repeating the edge) on both spatial axes.
Var reflection_pad(const Var& x, int pad);

// weight: [out, in, k, k]; bias: [1, out, 1, 1] or undefined. Zero padding.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);

// weight: [in, out, k, k]; bias: [1, out, 1, 1] or undefined.
// Output extent is (in - 1) * stride - 2 * pad + k.
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride,
                     int pad);

// Per-sample, per-channel normalisation with affine scale/shift [1, C, 1, 1].
Var instance_norm(const Var& x, const Var& scale, const Var& shift,
                  double eps = 1e-5);

Var leaky_relu(const Var& x, double slope);
inline Var relu(const Var& x) { return leaky_relu(x, 0.0); }
Var tanh(const Var& x);

// Inverted dropout: kept activations are scaled by 1 / (1 - p).
Var dropout(const Var& x, double p, std::mt19937_64& rng);

Var concat_channels(std::span<const Var> parts);

// Factor-2 bilinear resize with half-pixel centres.
Var upsample_bilinear2x(const Var& x);

// Mean absolute difference over all elements. Returns a 1x1x1x1 Var.
Var l1_loss(const Var& pred, const Var& target);

// Mean binary cross-entropy of sigmoid(logits) against a constant target,
// evaluated in the overflow-free logit form.
Var bce_with_logits(const Var& logits, double target);

Var add(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

}  // namespace hpix::ag
