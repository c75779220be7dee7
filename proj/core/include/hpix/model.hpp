#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "hpix/autograd.hpp"
#include "hpix/tensor.hpp"

namespace hpix {

enum class BlockKind { encoder, decoder, transition, head };

std::string to_string(BlockKind kind);

// One learnable block. Encoders halve the spatial extent (stride-2 conv),
// decoders double it (stride-2 transposed conv), transitions fuse at the same
// level (stride-1 conv), heads project features to an image (1x1 conv).
struct BlockSpec {
  BlockKind kind = BlockKind::encoder;
  int in_channels = 0;
  int out_channels = 0;
  bool apply_norm = true;
  bool apply_activation = true;
  double dropout_prob = 0.0;
  int kernel = 4;
  int stride = 2;
  int padding = 1;
  bool reflect_padding = true;
  // Activation slope on the negative side: 0.2 for encoder-style blocks,
  // 0 (plain ReLU) for decoders.
  double negative_slope = 0.2;
};

// Pix2Pix channel ladder: 64, 128, 256, 512, 512, ...
std::vector<int> pix2pix_channels(int depth, int base = 64);

// Nested (UNet++-style) generator. Node x(i,j) exists for i + j <= depth - 1;
// x(i,0) is the encoder column, x(0,depth-1) is the image-producing node.
struct GlobalGeneratorSpec {
  int depth = 8;
  std::vector<int> level_channels = pix2pix_channels(8);
  std::vector<int> supervision_columns{1, 2, 3, 4, 5, 6};
  int input_channels = 3;
  int output_channels = 3;

  // Same topology with a narrower channel ladder; heads on every top-row
  // column except the final one.
  static GlobalGeneratorSpec with_width(int depth, int base);
  void validate() const;
  bool operator==(const GlobalGeneratorSpec&) const = default;
};

// Encoder-decoder with skips over the satellite tile concatenated with the
// global generator's output.
struct LocalGeneratorSpec {
  int depth = 8;
  std::vector<int> level_channels = pix2pix_channels(8);
  int input_channels = 6;
  int output_channels = 3;

  static LocalGeneratorSpec with_width(int depth, int base);
  void validate() const;
  bool operator==(const LocalGeneratorSpec&) const = default;
};

// Five-block PatchGAN. 256x256 pairs map to a 26x26 logit grid.
struct DiscriminatorSpec {
  std::vector<int> block_channels{64, 128, 256, 512, 1};
  std::vector<int> strides{2, 2, 2, 1, 1};
  std::vector<int> paddings{1, 1, 1, 0, 0};
  int kernel = 4;
  double leaky_slope = 0.2;
  int input_channels = 6;

  static DiscriminatorSpec with_width(int base);
  void validate() const;
  bool operator==(const DiscriminatorSpec&) const = default;
};

using NetworkSpec = std::variant<GlobalGeneratorSpec, LocalGeneratorSpec, DiscriminatorSpec>;

struct NamedBlock {
  std::string id;
  BlockSpec spec;
};

// Block list of a network in evaluation order. Parameter keys are derived
// from these ids, so the key set is a pure function of the spec.
std::vector<NamedBlock> network_blocks(const NetworkSpec& spec);

// Learnable arrays keyed "<block id>/<tensor>", where tensor is one of
// weight, bias, norm_scale, norm_shift.
struct NetworkParams {
  NetworkSpec spec;
  std::map<std::string, Tensor> tensors;

  const Tensor& at(const std::string& key) const;
  // Distinct block ids, in key order.
  std::vector<std::string> groups() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

using Gradients = std::map<std::string, Tensor>;

// Fresh parameters: conv weights ~ N(0, 0.02), norm scales ~ N(1, 0.02),
// shifts and biases zero. Deterministic in `seed`.
NetworkParams build_network(const NetworkSpec& spec, std::uint64_t seed);

// Parameters wrapped as graph leaves for one forward/backward pass.
class BoundParams {
 public:
  BoundParams(const NetworkParams& params, bool requires_grad);

  const ag::Var& operator[](const std::string& key) const;
  const NetworkSpec& spec() const { return *spec_; }
  bool contains(const std::string& key) const { return vars_.count(key) > 0; }

  // Gradients accumulated so far; arrays that received none are zero.
  Gradients gradients() const;

 private:
  const NetworkSpec* spec_;
  std::map<std::string, ag::Var> vars_;
};

enum class Mode { train, eval };

// Dropout source for train mode; ignored in eval mode.
struct ForwardContext {
  Mode mode = Mode::eval;
  std::mt19937_64* rng = nullptr;
};

struct GeneratorVars {
  ag::Var final;
  std::vector<ag::Var> supervision_heads;
};

struct GeneratorOutput {
  Tensor final;
  std::vector<Tensor> supervision_heads;
};

// Graph-building forwards (used by training and gradient checks).
GeneratorVars global_forward(const BoundParams& params, const ag::Var& x,
                             const ForwardContext& ctx);
GeneratorVars local_forward(const BoundParams& params, const ag::Var& x, const ag::Var& g,
                            const ForwardContext& ctx);
ag::Var discriminator_forward(const BoundParams& params, const ag::Var& x, const ag::Var& y);

// Inference forwards: evaluation mode, no graph retained.
GeneratorOutput global_forward(const NetworkParams& params, const Tensor& x);
GeneratorOutput local_forward(const NetworkParams& params, const Tensor& x, const Tensor& g);
Tensor discriminator_forward(const NetworkParams& params, const Tensor& x, const Tensor& y);

// Spatial extent of the discriminator's logit grid for a square input.
int discriminator_output_size(const DiscriminatorSpec& spec, int input_size);

}  // namespace hpix
