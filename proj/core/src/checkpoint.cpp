#include "hpix/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "hpix/error.hpp"
#include "hpix/image.hpp"

namespace hpix {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in host order and must be little-endian");

json spec_to_json(const NetworkSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, GlobalGeneratorSpec>) {
          return {{"kind", "global_generator"},     {"depth", s.depth},
                  {"level_channels", s.level_channels}, {"supervision_columns", s.supervision_columns},
                  {"input_channels", s.input_channels}, {"output_channels", s.output_channels}};
        } else if constexpr (std::is_same_v<S, LocalGeneratorSpec>) {
          return {{"kind", "local_generator"},
                  {"depth", s.depth},
                  {"level_channels", s.level_channels},
                  {"input_channels", s.input_channels},
                  {"output_channels", s.output_channels}};
        } else {
          return {{"kind", "discriminator"},   {"block_channels", s.block_channels},
                  {"strides", s.strides},      {"paddings", s.paddings},
                  {"kernel", s.kernel},        {"leaky_slope", s.leaky_slope},
                  {"input_channels", s.input_channels}};
        }
      },
      spec);
}

NetworkSpec spec_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "global_generator") {
    GlobalGeneratorSpec s;
    s.depth = j.at("depth");
    s.level_channels = j.at("level_channels").get<std::vector<int>>();
    s.supervision_columns = j.at("supervision_columns").get<std::vector<int>>();
    s.input_channels = j.at("input_channels");
    s.output_channels = j.at("output_channels");
    return s;
  }
  if (kind == "local_generator") {
    LocalGeneratorSpec s;
    s.depth = j.at("depth");
    s.level_channels = j.at("level_channels").get<std::vector<int>>();
    s.input_channels = j.at("input_channels");
    s.output_channels = j.at("output_channels");
    return s;
  }
  if (kind == "discriminator") {
    DiscriminatorSpec s;
    s.block_channels = j.at("block_channels").get<std::vector<int>>();
    s.strides = j.at("strides").get<std::vector<int>>();
    s.paddings = j.at("paddings").get<std::vector<int>>();
    s.kernel = j.at("kernel");
    s.leaky_slope = j.at("leaky_slope");
    s.input_channels = j.at("input_channels");
    return s;
  }
  throw IngestionError("checkpoint: unknown network kind " + kind);
}

json config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"lambda_l1", c.weights.lambda_l1},
          {"lambda_ds", c.weights.lambda_ds},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"adam_eps", c.adam.eps},
          {"augment", c.augmentation.enabled},
          {"jitter_resize", c.augmentation.jitter_resize},
          {"crop", c.augmentation.crop},
          {"hflip_prob", c.augmentation.hflip_prob},
          {"joint_routing", c.joint_routing},
          {"baseline_pix2pix", c.baseline_pix2pix},
          {"depth", c.depth},
          {"base_channels", c.base_channels},
          {"disc_base_channels", c.disc_base_channels},
          {"fixed_epoch_order", c.fixed_epoch_order}};
}

TrainConfig config_from(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.weights.lambda_l1 = j.value("lambda_l1", c.weights.lambda_l1);
  c.weights.lambda_ds = j.value("lambda_ds", c.weights.lambda_ds);
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.eps = j.value("adam_eps", c.adam.eps);
  c.augmentation.enabled = j.value("augment", c.augmentation.enabled);
  c.augmentation.jitter_resize = j.value("jitter_resize", c.augmentation.jitter_resize);
  c.augmentation.crop = j.value("crop", c.augmentation.crop);
  c.augmentation.hflip_prob = j.value("hflip_prob", c.augmentation.hflip_prob);
  c.joint_routing = j.value("joint_routing", c.joint_routing);
  c.baseline_pix2pix = j.value("baseline_pix2pix", c.baseline_pix2pix);
  c.depth = j.value("depth", c.depth);
  c.base_channels = j.value("base_channels", c.base_channels);
  c.disc_base_channels = j.value("disc_base_channels", c.disc_base_channels);
  c.fixed_epoch_order = j.value("fixed_epoch_order", c.fixed_epoch_order);
  return c;
}

struct NetworkSlot {
  const char* name;
  NetworkParams TrainingState::*params;
  OptimizerState TrainingState::*optimizer;
};

constexpr NetworkSlot kSlots[] = {
    {"global_gen", &TrainingState::global_gen, &TrainingState::global_gen_opt},
    {"local_gen", &TrainingState::local_gen, &TrainingState::local_gen_opt},
    {"global_disc", &TrainingState::global_disc, &TrainingState::global_disc_opt},
    {"local_disc", &TrainingState::local_disc, &TrainingState::local_disc_opt},
};

}  // namespace

std::string config_to_json(const TrainConfig& config) { return config_json(config).dump(2); }

TrainConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const TrainingState& state) {
  json header;
  header["format"] = kCheckpointFormat;
  header["mode"] = state.config.baseline_pix2pix ? "pix2pix-baseline" : "hpix";
  header["epoch"] = state.epoch;
  header["step"] = state.step;
  header["seed"] = state.config.seed;
  header["config"] = config_json(state.config);

  std::vector<const Tensor*> payload;
  json index = json::array();
  std::size_t offset = 0;
  auto add_tensor = [&](const std::string& name, const Tensor& t) {
    const Shape s = t.shape();
    index.push_back({{"name", name}, {"shape", {s.n, s.c, s.h, s.w}}, {"offset", offset}});
    offset += t.size();
    payload.push_back(&t);
  };
  for (const auto& slot : kSlots) {
    const NetworkParams& params = state.*slot.params;
    const OptimizerState& opt = state.*slot.optimizer;
    header["specs"][slot.name] = spec_to_json(params.spec);
    header["optimizers"][slot.name] = {{"step", opt.step},
                                       {"learning_rate", opt.hyper.learning_rate},
                                       {"beta1", opt.hyper.beta1},
                                       {"beta2", opt.hyper.beta2},
                                       {"eps", opt.hyper.eps}};
    const std::string prefix = slot.name;
    for (const auto& [key, t] : params.tensors) add_tensor(prefix + "/param/" + key, t);
    for (const auto& [key, t] : opt.first_moment) add_tensor(prefix + "/adam_m/" + key, t);
    for (const auto& [key, t] : opt.second_moment) add_tensor(prefix + "/adam_v/" + key, t);
  }
  header["tensors"] = std::move(index);
  header["payload_doubles"] = offset;

  const std::string head = header.dump();
  std::string blob;
  blob.reserve(32 + head.size() + offset * sizeof(double));
  blob += kCheckpointFormat;
  blob += '\n';
  const std::uint64_t len = head.size();
  blob.append(reinterpret_cast<const char*>(&len), sizeof(len));
  blob += head;
  for (const Tensor* t : payload) {
    blob.append(reinterpret_cast<const char*>(t->data()), t->size() * sizeof(double));
  }
  write_text_atomic(path, blob);
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open checkpoint " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointFormat) {
    throw IngestionError(path.string() + " is not an " + std::string(kCheckpointFormat) +
                         " checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string head(len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(len));
  if (!in) throw IngestionError("truncated checkpoint header in " + path.string());

  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    throw IngestionError("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  const std::size_t total = header.at("payload_doubles").get<std::size_t>();
  std::vector<double> payload(total);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(total * sizeof(double)));
  if (!in) throw IngestionError("truncated checkpoint payload in " + path.string());

  TrainingState state;
  state.config = config_from(header.at("config"));
  state.epoch = header.at("epoch");
  state.step = header.at("step");
  for (const auto& slot : kSlots) {
    (state.*slot.params).spec = spec_from_json(header.at("specs").at(slot.name));
    const json& o = header.at("optimizers").at(slot.name);
    OptimizerState& opt = state.*slot.optimizer;
    opt.step = o.at("step");
    opt.hyper = {o.at("learning_rate"), o.at("beta1"), o.at("beta2"), o.at("eps")};
  }
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name");
    const auto dims = entry.at("shape").get<std::vector<int>>();
    const std::size_t off = entry.at("offset");
    const Shape shape{dims.at(0), dims.at(1), dims.at(2), dims.at(3)};
    if (off + shape.numel() > payload.size()) {
      throw IngestionError("checkpoint tensor " + name + " exceeds payload");
    }
    const auto first = payload.begin() + static_cast<std::ptrdiff_t>(off);
    Tensor t(shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(shape.numel())));

    const auto s1 = name.find('/');
    const auto s2 = name.find('/', s1 + 1);
    if (s1 == std::string::npos || s2 == std::string::npos) {
      throw IngestionError("malformed checkpoint tensor name " + name);
    }
    const std::string network = name.substr(0, s1);
    const std::string role = name.substr(s1 + 1, s2 - s1 - 1);
    const std::string key = name.substr(s2 + 1);
    const NetworkSlot* slot = nullptr;
    for (const auto& candidate : kSlots) {
      if (network == candidate.name) slot = &candidate;
    }
    if (slot == nullptr) throw IngestionError("unknown network in checkpoint: " + network);
    if (role == "param") {
      (state.*slot->params).tensors.emplace(key, std::move(t));
    } else if (role == "adam_m") {
      (state.*slot->optimizer).first_moment.emplace(key, std::move(t));
    } else if (role == "adam_v") {
      (state.*slot->optimizer).second_moment.emplace(key, std::move(t));
    } else {
      throw IngestionError("unknown tensor role in checkpoint: " + role);
    }
  }
  return state;
}

}  // namespace hpix
