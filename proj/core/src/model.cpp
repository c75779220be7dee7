#include "hpix/model.hpp"

#include <algorithm>
#include <set>

#include "hpix/error.hpp"

namespace hpix {
namespace {

constexpr double kDecoderDropout = 0.5;
constexpr double kEncoderSlope = 0.2;

std::string node_id(int level, int column) {
  return "x" + std::to_string(level) + "_" + std::to_string(column);
}

void check_channels(const std::vector<int>& channels, int depth, const char* what) {
  if (depth < 2) throw SpecError(std::string(what) + ": depth must be at least 2");
  if (static_cast<int>(channels.size()) != depth) {
    throw SpecError(std::string(what) + ": expected " + std::to_string(depth) +
                    " level channel counts, got " + std::to_string(channels.size()));
  }
  for (int c : channels) {
    if (c <= 0) throw SpecError(std::string(what) + ": channel counts must be positive");
  }
}

BlockSpec encoder_block(int in, int out, bool norm, bool activation) {
  BlockSpec b;
  b.kind = BlockKind::encoder;
  b.in_channels = in;
  b.out_channels = out;
  b.apply_norm = norm;
  b.apply_activation = activation;
  b.negative_slope = kEncoderSlope;
  return b;
}

BlockSpec decoder_block(int in, int out) {
  BlockSpec b;
  b.kind = BlockKind::decoder;
  b.in_channels = in;
  b.out_channels = out;
  b.dropout_prob = kDecoderDropout;
  b.reflect_padding = false;
  b.negative_slope = 0.0;
  return b;
}

// Image-producing transposed conv; followed by tanh in the forward pass.
BlockSpec output_block(int in, int out) {
  BlockSpec b = decoder_block(in, out);
  b.apply_norm = false;
  b.apply_activation = false;
  b.dropout_prob = 0.0;
  return b;
}

BlockSpec transition_block(int in, int out) {
  BlockSpec b;
  b.kind = BlockKind::transition;
  b.in_channels = in;
  b.out_channels = out;
  b.kernel = 3;
  b.stride = 1;
  b.padding = 1;
  b.negative_slope = kEncoderSlope;
  return b;
}

BlockSpec head_block(int in, int out) {
  BlockSpec b;
  b.kind = BlockKind::head;
  b.in_channels = in;
  b.out_channels = out;
  b.apply_norm = false;
  b.apply_activation = false;
  b.kernel = 1;
  b.stride = 1;
  b.padding = 0;
  return b;
}

std::vector<NamedBlock> global_blocks(const GlobalGeneratorSpec& s) {
  const auto& c = s.level_channels;
  const int d = s.depth;
  std::vector<NamedBlock> blocks;
  for (int i = 0; i < d; ++i) {
    const int in = i == 0 ? s.input_channels : c[i - 1];
    blocks.push_back({node_id(i, 0), encoder_block(in, c[i], i != 0 && i != d - 1, i != d - 1)});
  }
  for (int j = 1; j < d; ++j) {
    for (int i = 0; i + j <= d - 1; ++i) {
      const std::string id = node_id(i, j);
      blocks.push_back({id + ".up", decoder_block(c[i + 1], c[i])});
      if (i == 0 && j == d - 1) {
        blocks.push_back({id + ".out", output_block((j + 1) * c[0], s.output_channels)});
      } else {
        blocks.push_back({id + ".fuse", transition_block((j + 1) * c[i], c[i])});
      }
    }
  }
  for (int col : s.supervision_columns) {
    blocks.push_back({"head" + std::to_string(col), head_block(c[0], s.output_channels)});
  }
  return blocks;
}

std::vector<NamedBlock> local_blocks(const LocalGeneratorSpec& s) {
  const auto& c = s.level_channels;
  const int d = s.depth;
  std::vector<NamedBlock> blocks;
  for (int i = 0; i < d; ++i) {
    const int in = i == 0 ? s.input_channels : c[i - 1];
    blocks.push_back({"e" + std::to_string(i),
                      encoder_block(in, c[i], i != 0 && i != d - 1, i != d - 1)});
  }
  for (int i = d - 2; i >= 0; --i) {
    const int in = i == d - 2 ? c[d - 1] : 2 * c[i + 1];
    blocks.push_back({"d" + std::to_string(i), decoder_block(in, c[i])});
  }
  blocks.push_back({"out", output_block(2 * c[0], s.output_channels)});
  return blocks;
}

std::vector<NamedBlock> discriminator_blocks(const DiscriminatorSpec& s) {
  std::vector<NamedBlock> blocks;
  int in = s.input_channels;
  for (int b = 0; b < 5; ++b) {
    const bool first = b == 0;
    const bool last = b == 4;
    BlockSpec spec = encoder_block(in, s.block_channels[b], !first && !last, !last);
    spec.kernel = s.kernel;
    spec.stride = s.strides[b];
    spec.padding = s.paddings[b];
    spec.reflect_padding = false;
    spec.negative_slope = s.leaky_slope;
    blocks.push_back({"block" + std::to_string(b + 1), spec});
    in = s.block_channels[b];
  }
  return blocks;
}

const BlockSpec& find_block(const std::vector<NamedBlock>& blocks, const std::string& id) {
  for (const auto& b : blocks) {
    if (b.id == id) return b.spec;
  }
  throw SpecError("unknown block " + id);
}

ag::Var apply_block(const BoundParams& p, const std::string& id, const BlockSpec& b,
                    ag::Var x, const ForwardContext& ctx) {
  const ag::Var& weight = p[id + "/weight"];
  const ag::Var bias = b.apply_norm ? ag::Var() : p[id + "/bias"];
  ag::Var y;
  if (b.kind == BlockKind::decoder) {
    y = ag::conv_transpose2d(x, weight, bias, b.stride, b.padding);
  } else if (b.reflect_padding && b.padding > 0) {
    y = ag::conv2d(ag::reflection_pad(x, b.padding), weight, bias, b.stride, 0);
  } else {
    y = ag::conv2d(x, weight, bias, b.stride, b.padding);
  }
  if (b.apply_norm) y = ag::instance_norm(y, p[id + "/norm_scale"], p[id + "/norm_shift"]);
  if (b.apply_activation) y = ag::leaky_relu(y, b.negative_slope);
  if (ctx.mode == Mode::train && b.dropout_prob > 0.0) {
    if (ctx.rng == nullptr) throw ContractError("train-mode forward needs a dropout RNG");
    y = ag::dropout(y, b.dropout_prob, *ctx.rng);
  }
  return y;
}

void check_generator_input(const Shape& s, int channels, int depth, const char* what) {
  if (s.c != channels) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(channels) +
                     " channels, got " + s.str());
  }
  const int unit = 1 << depth;
  if (s.h < unit || s.w < unit || s.h % unit != 0 || s.w % unit != 0) {
    throw ShapeError(std::string(what) + ": spatial extent of " + s.str() +
                     " must be a positive multiple of " + std::to_string(unit) +
                     " for depth " + std::to_string(depth));
  }
}

void check_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw InputError(std::string(what) + ": non-finite input");
}

template <typename Spec>
const Spec& spec_as(const NetworkSpec& spec, const char* what) {
  const auto* s = std::get_if<Spec>(&spec);
  if (s == nullptr) throw ContractError(std::string(what) + ": parameters of the wrong network");
  return *s;
}

}  // namespace

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::encoder: return "encoder";
    case BlockKind::decoder: return "decoder";
    case BlockKind::transition: return "transition";
    case BlockKind::head: return "head";
  }
  return "?";
}

std::vector<int> pix2pix_channels(int depth, int base) {
  std::vector<int> c;
  for (int i = 0; i < depth; ++i) c.push_back(base * std::min(1 << std::min(i, 3), 8));
  return c;
}

GlobalGeneratorSpec GlobalGeneratorSpec::with_width(int depth, int base) {
  GlobalGeneratorSpec s;
  s.depth = depth;
  s.level_channels = pix2pix_channels(depth, base);
  s.supervision_columns.clear();
  for (int j = 1; j <= depth - 2; ++j) s.supervision_columns.push_back(j);
  return s;
}

void GlobalGeneratorSpec::validate() const {
  check_channels(level_channels, depth, "global generator");
  if (input_channels <= 0 || output_channels <= 0) {
    throw SpecError("global generator: image channel counts must be positive");
  }
  std::set<int> seen;
  for (int col : supervision_columns) {
    if (col < 1 || col > depth - 2 || !seen.insert(col).second) {
      throw SpecError("global generator: invalid supervision column " + std::to_string(col));
    }
  }
}

LocalGeneratorSpec LocalGeneratorSpec::with_width(int depth, int base) {
  LocalGeneratorSpec s;
  s.depth = depth;
  s.level_channels = pix2pix_channels(depth, base);
  return s;
}

void LocalGeneratorSpec::validate() const {
  check_channels(level_channels, depth, "local generator");
  if (output_channels <= 0 || input_channels != 2 * output_channels) {
    throw SpecError("local generator: input channels must be twice the image channels");
  }
}

DiscriminatorSpec DiscriminatorSpec::with_width(int base) {
  DiscriminatorSpec s;
  s.block_channels = {base, 2 * base, 4 * base, 8 * base, 1};
  return s;
}

void DiscriminatorSpec::validate() const {
  if (block_channels.size() != 5 || strides.size() != 5 || paddings.size() != 5) {
    throw SpecError("discriminator: exactly five blocks are required");
  }
  for (int b = 0; b < 5; ++b) {
    if (block_channels[b] <= 0 || strides[b] <= 0 || paddings[b] < 0) {
      throw SpecError("discriminator: invalid geometry in block " + std::to_string(b + 1));
    }
  }
  if (block_channels[4] != 1 || strides[4] != 1) {
    throw SpecError("discriminator: final block must be single-channel with stride 1");
  }
  if (kernel <= 0 || input_channels <= 0 || !(leaky_slope >= 0.0)) {
    throw SpecError("discriminator: invalid kernel, input channels or slope");
  }
}

std::vector<NamedBlock> network_blocks(const NetworkSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::vector<NamedBlock> {
        s.validate();
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, GlobalGeneratorSpec>) {
          return global_blocks(s);
        } else if constexpr (std::is_same_v<S, LocalGeneratorSpec>) {
          return local_blocks(s);
        } else {
          return discriminator_blocks(s);
        }
      },
      spec);
}

const Tensor& NetworkParams::at(const std::string& key) const {
  const auto it = tensors.find(key);
  if (it == tensors.end()) throw ContractError("missing parameter " + key);
  return it->second;
}

std::vector<std::string> NetworkParams::groups() const {
  std::vector<std::string> out;
  for (const auto& [key, _] : tensors) {
    std::string group = key.substr(0, key.rfind('/'));
    if (out.empty() || out.back() != group) out.push_back(std::move(group));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors) n += t.size();
  return n;
}

bool NetworkParams::all_finite() const {
  return std::all_of(tensors.begin(), tensors.end(),
                     [](const auto& kv) { return kv.second.all_finite(); });
}

NetworkParams build_network(const NetworkSpec& spec, std::uint64_t seed) {
  NetworkParams params{spec, {}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> weight_init(0.0, 0.02);
  std::normal_distribution<double> scale_init(1.0, 0.02);
  for (const auto& [id, b] : network_blocks(spec)) {
    const Shape ws = b.kind == BlockKind::decoder
                         ? Shape{b.in_channels, b.out_channels, b.kernel, b.kernel}
                         : Shape{b.out_channels, b.in_channels, b.kernel, b.kernel};
    Tensor w(ws);
    for (double& v : w.values()) v = weight_init(rng);
    params.tensors.emplace(id + "/weight", std::move(w));
    const Shape per_channel{1, b.out_channels, 1, 1};
    if (b.apply_norm) {
      Tensor scale(per_channel);
      for (double& v : scale.values()) v = scale_init(rng);
      params.tensors.emplace(id + "/norm_scale", std::move(scale));
      params.tensors.emplace(id + "/norm_shift", Tensor(per_channel));
    } else {
      params.tensors.emplace(id + "/bias", Tensor(per_channel));
    }
  }
  return params;
}

BoundParams::BoundParams(const NetworkParams& params, bool requires_grad)
    : spec_(&params.spec) {
  for (const auto& [key, t] : params.tensors) {
    vars_.emplace(key, requires_grad ? ag::Var::borrowed_parameter(t) : ag::Var::borrowed_constant(t));
  }
}

const ag::Var& BoundParams::operator[](const std::string& key) const {
  const auto it = vars_.find(key);
  if (it == vars_.end()) throw ContractError("missing parameter " + key);
  return it->second;
}

Gradients BoundParams::gradients() const {
  Gradients out;
  for (const auto& [key, var] : vars_) {
    out.emplace(key, var.grad().empty() ? Tensor(var.shape()) : var.grad());
  }
  return out;
}

GeneratorVars global_forward(const BoundParams& params, const ag::Var& x,
                             const ForwardContext& ctx) {
  const auto& spec = spec_as<GlobalGeneratorSpec>(params.spec(), "global_forward");
  check_generator_input(x.shape(), spec.input_channels, spec.depth, "global_forward");
  const auto blocks = network_blocks(params.spec());
  const auto run = [&](const std::string& id, const ag::Var& in) {
    return apply_block(params, id, find_block(blocks, id), in, ctx);
  };

  const int d = spec.depth;
  // nodes[i][j] holds x(i,j).
  std::vector<std::vector<ag::Var>> nodes(d);
  ag::Var prev = x;
  for (int i = 0; i < d; ++i) {
    prev = run(node_id(i, 0), prev);
    nodes[i].push_back(prev);
  }

  GeneratorVars out;
  for (int j = 1; j < d; ++j) {
    for (int i = 0; i + j <= d - 1; ++i) {
      const std::string id = node_id(i, j);
      std::vector<ag::Var> parts{run(id + ".up", nodes[i + 1][j - 1])};
      parts.insert(parts.end(), nodes[i].begin(), nodes[i].begin() + j);
      const ag::Var fused = ag::concat_channels(parts);
      if (i == 0 && j == d - 1) {
        out.final = ag::tanh(run(id + ".out", fused));
      } else {
        nodes[i].push_back(run(id + ".fuse", fused));
      }
    }
  }

  for (int col : spec.supervision_columns) {
    const ag::Var projected = run("head" + std::to_string(col), nodes[0][col]);
    out.supervision_heads.push_back(ag::tanh(ag::upsample_bilinear2x(projected)));
  }
  return out;
}

GeneratorVars local_forward(const BoundParams& params, const ag::Var& x, const ag::Var& g,
                            const ForwardContext& ctx) {
  const auto& spec = spec_as<LocalGeneratorSpec>(params.spec(), "local_forward");
  if (x.shape() != g.shape()) {
    throw ShapeError("local_forward: satellite " + x.shape().str() + " and global output " +
                     g.shape().str() + " differ");
  }
  check_generator_input(x.shape(), spec.input_channels / 2, spec.depth, "local_forward");
  const auto blocks = network_blocks(params.spec());
  const auto run = [&](const std::string& id, const ag::Var& in) {
    return apply_block(params, id, find_block(blocks, id), in, ctx);
  };

  const int d = spec.depth;
  std::vector<ag::Var> enc;
  const std::vector<ag::Var> inputs{x, g};
  ag::Var prev = ag::concat_channels(inputs);
  for (int i = 0; i < d; ++i) {
    prev = run("e" + std::to_string(i), prev);
    enc.push_back(prev);
  }
  ag::Var up = run("d" + std::to_string(d - 2), enc[d - 1]);
  for (int i = d - 3; i >= 0; --i) {
    const std::vector<ag::Var> skip{up, enc[i + 1]};
    up = run("d" + std::to_string(i), ag::concat_channels(skip));
  }
  const std::vector<ag::Var> skip{up, enc[0]};
  return {ag::tanh(run("out", ag::concat_channels(skip))), {}};
}

int discriminator_output_size(const DiscriminatorSpec& spec, int input_size) {
  int s = input_size;
  for (int b = 0; b < 5; ++b) {
    const int padded = s + 2 * spec.paddings[b];
    if (padded < spec.kernel) return 0;
    s = (padded - spec.kernel) / spec.strides[b] + 1;
  }
  return s;
}

ag::Var discriminator_forward(const BoundParams& params, const ag::Var& x, const ag::Var& y) {
  const auto& spec = spec_as<DiscriminatorSpec>(params.spec(), "discriminator_forward");
  const Shape xs = x.shape();
  const Shape ys = y.shape();
  if (xs.n != ys.n || xs.h != ys.h || xs.w != ys.w || xs.c + ys.c != spec.input_channels) {
    throw ShapeError("discriminator_forward: cannot pair " + xs.str() + " with " + ys.str());
  }
  if (discriminator_output_size(spec, std::min(xs.h, xs.w)) < 1) {
    throw ShapeError("discriminator_forward: input " + xs.str() + " too small");
  }
  const auto blocks = network_blocks(params.spec());
  const ForwardContext ctx{};
  const std::vector<ag::Var> pair{x, y};
  ag::Var h = ag::concat_channels(pair);
  for (const auto& [id, b] : blocks) h = apply_block(params, id, b, h, ctx);
  return h;
}

GeneratorOutput global_forward(const NetworkParams& params, const Tensor& x) {
  check_finite(x, "global_forward");
  const BoundParams bound(params, false);
  const GeneratorVars vars = global_forward(bound, ag::Var::constant(x), ForwardContext{});
  GeneratorOutput out{vars.final.value(), {}};
  for (const auto& h : vars.supervision_heads) out.supervision_heads.push_back(h.value());
  return out;
}

GeneratorOutput local_forward(const NetworkParams& params, const Tensor& x, const Tensor& g) {
  check_finite(x, "local_forward");
  check_finite(g, "local_forward");
  const BoundParams bound(params, false);
  const GeneratorVars vars =
      local_forward(bound, ag::Var::constant(x), ag::Var::constant(g), ForwardContext{});
  return {vars.final.value(), {}};
}

Tensor discriminator_forward(const NetworkParams& params, const Tensor& x, const Tensor& y) {
  const BoundParams bound(params, false);
  return discriminator_forward(bound, ag::Var::constant(x), ag::Var::constant(y)).value();
}

}  // namespace hpix
