#include "mpdse/workload.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include <fmt/format.h>
#include <json.hpp>

#include "mpdse/error.hpp"
#include "json_util.hpp"

namespace mpdse {

using nlohmann::json;

std::string_view to_string(LayerTag tag) {
  switch (tag) {
    case LayerTag::stem:
      return "stem";
    case LayerTag::block:
      return "block";
    case LayerTag::projection:
      return "projection";
  }
  return "block";
}

LayerTag parse_layer_tag(std::string_view text) {
  if (text == "stem") return LayerTag::stem;
  if (text == "block") return LayerTag::block;
  if (text == "projection") return LayerTag::projection;
  throw ValidationError(fmt::format("unknown layer tag '{}'", text));
}

int ConvLayerSpec::max_weight_bits() const {
  int bits = 0;
  for (const auto& g : weight_groups) bits = std::max(bits, g.bits);
  return bits;
}

int ConvLayerSpec::min_weight_bits() const {
  int bits = weight_groups.empty() ? 0 : weight_groups.front().bits;
  for (const auto& g : weight_groups) bits = std::min(bits, g.bits);
  return bits;
}

ConvLayerSpec make_layer(std::string name, int input_height, int input_channels,
                         int output_channels, int kernel, int stride,
                         int weight_bits, LayerTag tag, int activation_bits) {
  ConvLayerSpec layer;
  layer.name = std::move(name);
  layer.input_height = input_height;
  layer.input_channels = input_channels;
  layer.output_channels = output_channels;
  layer.kernel = kernel;
  layer.stride = stride;
  layer.activation_bits = activation_bits;
  layer.weight_groups = {{output_channels, weight_bits}};
  layer.tag = tag;
  return layer;
}

namespace {

[[noreturn]] void fail_field(const std::string& layer, std::string_view field,
                             const std::string& why) {
  throw ValidationError(fmt::format("layer '{}': field '{}': {}", layer, field, why));
}

}  // namespace

void validate(const ConvLayerSpec& layer, const WorkloadLimits& limits) {
  const auto& n = layer.name;
  if (layer.input_height < 1) fail_field(n, "ih", "must be >= 1");
  if (layer.input_channels < 1) fail_field(n, "iw", "must be >= 1");
  if (layer.output_channels < 1) fail_field(n, "od", "must be >= 1");
  if (layer.kernel < 1) fail_field(n, "k", "must be >= 1");
  if (layer.stride < 1) fail_field(n, "s", "must be >= 1");
  if (layer.activation_bits < 1) fail_field(n, "n_bits", "must be >= 1");
  if (layer.weight_groups.empty()) fail_field(n, "wq", "no precision groups");

  long long channels = 0;
  for (const auto& g : layer.weight_groups) {
    if (g.channels < 1) fail_field(n, "wq", "group channel count must be >= 1");
    const auto& ok = limits.supported_weight_bits;
    if (std::find(ok.begin(), ok.end(), g.bits) == ok.end())
      fail_field(n, "wq", fmt::format("unsupported word-length {}", g.bits));
    if (g.bits > layer.activation_bits)
      fail_field(n, "wq",
                 fmt::format("word-length {} exceeds activation width {}", g.bits,
                             layer.activation_bits));
    channels += g.channels;
  }
  if (channels != layer.output_channels)
    fail_field(n, "wq",
               fmt::format("group sizes sum to {} but od is {}", channels,
                           layer.output_channels));
}

void validate(const NetworkSpec& net, const WorkloadLimits& limits) {
  if (net.layers.empty())
    throw ValidationError(fmt::format("network '{}' has no layers", net.name));
  for (const auto& layer : net.layers) validate(layer, limits);
}

std::vector<PrecisionGroup> normalize_groups(std::vector<PrecisionGroup> groups) {
  std::vector<PrecisionGroup> out;
  for (const auto& g : groups) {
    if (!out.empty() && out.back().bits == g.bits)
      out.back().channels += g.channels;
    else
      out.push_back(g);
  }
  return out;
}

namespace {

int int_field(const json& obj, const std::string& layer, const char* field,
              std::optional<int> fallback = std::nullopt) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    fail_field(layer, field, "missing");
  }
  if (!it->is_number_integer()) fail_field(layer, field, "expected an integer");
  return it->get<int>();
}

ConvLayerSpec layer_from_json(const json& j, std::size_t index) {
  if (!j.is_object())
    throw ValidationError(fmt::format("layers[{}]: expected an object", index));
  ConvLayerSpec layer;
  auto name_it = j.find("name");
  if (name_it == j.end() || !name_it->is_string())
    throw ValidationError(fmt::format("layers[{}]: field 'name': missing or not a string", index));
  layer.name = name_it->get<std::string>();
  detail::reject_unknown(j, {"name", "ih", "iw", "od", "k", "s", "n_bits", "wq", "tag"},
                 fmt::format("layer '{}'", layer.name));

  layer.input_height = int_field(j, layer.name, "ih");
  layer.input_channels = int_field(j, layer.name, "iw");
  layer.output_channels = int_field(j, layer.name, "od");
  layer.kernel = int_field(j, layer.name, "k");
  layer.stride = int_field(j, layer.name, "s");
  layer.activation_bits = int_field(j, layer.name, "n_bits", 8);

  auto wq = j.find("wq");
  if (wq == j.end()) fail_field(layer.name, "wq", "missing");
  if (wq->is_number_integer()) {
    layer.weight_groups = {{layer.output_channels, wq->get<int>()}};
  } else if (wq->is_array()) {
    layer.weight_groups.clear();
    for (const auto& g : *wq) {
      if (!g.is_object()) fail_field(layer.name, "wq", "group entries must be objects");
      detail::reject_unknown(g, {"channels", "bits"}, fmt::format("layer '{}': wq group", layer.name));
      PrecisionGroup group;
      group.channels = int_field(g, layer.name, "channels");
      group.bits = int_field(g, layer.name, "bits");
      layer.weight_groups.push_back(group);
    }
    layer.weight_groups = normalize_groups(std::move(layer.weight_groups));
  } else {
    fail_field(layer.name, "wq", "expected an integer or an array of {channels, bits}");
  }

  if (auto tag = j.find("tag"); tag != j.end()) {
    if (!tag->is_string()) fail_field(layer.name, "tag", "expected a string");
    try {
      layer.tag = parse_layer_tag(tag->get<std::string>());
    } catch (const ValidationError& e) {
      fail_field(layer.name, "tag", e.what());
    }
  }
  return layer;
}

}  // namespace

NetworkSpec parse_workload(std::string_view text, const WorkloadLimits& limits) {
  const json doc = detail::parse_json(text, "workload");
  if (!doc.is_object()) throw ValidationError("workload: top level must be an object");
  detail::reject_unknown(doc, {"name", "layers"}, "workload");

  NetworkSpec net;
  auto name = doc.find("name");
  if (name == doc.end() || !name->is_string())
    throw ValidationError("workload: field 'name': missing or not a string");
  net.name = name->get<std::string>();

  auto layers = doc.find("layers");
  if (layers == doc.end() || !layers->is_array())
    throw ValidationError("workload: field 'layers': missing or not an array");
  std::size_t index = 0;
  for (const auto& l : *layers) net.layers.push_back(layer_from_json(l, index++));

  validate(net, limits);
  return net;
}

NetworkSpec load_workload(const std::string& path, const WorkloadLimits& limits) {
  return parse_workload(detail::read_file(path, "workload"), limits);
}

std::string serialize_workload(const NetworkSpec& net) {
  json layers = json::array();
  for (const auto& l : net.layers) {
    json j;
    j["name"] = l.name;
    j["ih"] = l.input_height;
    j["iw"] = l.input_channels;
    j["od"] = l.output_channels;
    j["k"] = l.kernel;
    j["s"] = l.stride;
    j["n_bits"] = l.activation_bits;
    if (l.channelwise()) {
      json groups = json::array();
      for (const auto& g : l.weight_groups)
        groups.push_back({{"channels", g.channels}, {"bits", g.bits}});
      j["wq"] = std::move(groups);
    } else {
      j["wq"] = l.weight_groups.front().bits;
    }
    j["tag"] = std::string(to_string(l.tag));
    layers.push_back(std::move(j));
  }
  json doc;
  doc["name"] = net.name;
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

NetworkSpec resnet(int depth, int wq_inner) {
  std::vector<int> blocks;
  bool bottleneck = false;
  switch (depth) {
    case 18:
      blocks = {2, 2, 2, 2};
      break;
    case 50:
      blocks = {3, 4, 6, 3};
      bottleneck = true;
      break;
    case 152:
      blocks = {3, 8, 36, 3};
      bottleneck = true;
      break;
    default:
      throw ValidationError(fmt::format("unknown ResNet variant {}", depth));
  }
  WorkloadLimits limits;
  if (std::find(limits.supported_weight_bits.begin(), limits.supported_weight_bits.end(),
                wq_inner) == limits.supported_weight_bits.end())
    throw ValidationError(fmt::format("unsupported inner word-length {}", wq_inner));

  NetworkSpec net;
  net.name = fmt::format("resnet{}", depth);
  net.layers.push_back(make_layer("conv1", 224, 3, 64, 7, 2, 8, LayerTag::stem));

  // The stem's 3x3/2 max-pool brings the map to 56x56 before layer1.
  int side = 56;
  int in_ch = 64;
  for (std::size_t stage = 0; stage < blocks.size(); ++stage) {
    const int width = 64 << stage;
    const int out_ch = bottleneck ? width * 4 : width;
    for (int b = 0; b < blocks[stage]; ++b) {
      const int stride = (b == 0 && stage > 0) ? 2 : 1;
      const std::string prefix = fmt::format("layer{}.{}", stage + 1, b);
      const int out_side = (side + stride - 1) / stride;
      if (bottleneck) {
        // Stride sits on the 3x3 convolution.
        net.layers.push_back(make_layer(prefix + ".conv1", side, in_ch, width, 1, 1, wq_inner));
        net.layers.push_back(make_layer(prefix + ".conv2", side, width, width, 3, stride, wq_inner));
        net.layers.push_back(make_layer(prefix + ".conv3", out_side, width, out_ch, 1, 1, wq_inner));
      } else {
        net.layers.push_back(make_layer(prefix + ".conv1", side, in_ch, out_ch, 3, stride, wq_inner));
        net.layers.push_back(make_layer(prefix + ".conv2", out_side, out_ch, out_ch, 3, 1, wq_inner));
      }
      if (stride != 1 || in_ch != out_ch)
        net.layers.push_back(make_layer(prefix + ".downsample", side, in_ch, out_ch, 1, stride,
                                        wq_inner, LayerTag::projection));
      in_ch = out_ch;
      side = out_side;
    }
  }
  return net;
}

bool is_builtin_network(std::string_view name) {
  return name == "resnet18" || name == "resnet50" || name == "resnet152";
}

NetworkSpec builtin_network(std::string_view name, int wq_inner) {
  if (name == "resnet18") return resnet(18, wq_inner);
  if (name == "resnet50") return resnet(50, wq_inner);
  if (name == "resnet152") return resnet(152, wq_inner);
  throw ValidationError(fmt::format("unknown built-in network '{}'", name));
}

std::uint64_t group_macs(const ConvLayerSpec& layer, const PrecisionGroup& group) {
  const std::uint64_t out = static_cast<std::uint64_t>(layer.output_height());
  const std::uint64_t k = static_cast<std::uint64_t>(layer.kernel);
  return out * out * k * k * static_cast<std::uint64_t>(layer.input_channels) *
         static_cast<std::uint64_t>(group.channels);
}

std::uint64_t layer_macs(const ConvLayerSpec& layer) {
  const std::uint64_t out = static_cast<std::uint64_t>(layer.output_height());
  const std::uint64_t k = static_cast<std::uint64_t>(layer.kernel);
  return out * out * k * k * static_cast<std::uint64_t>(layer.input_channels) *
         static_cast<std::uint64_t>(layer.output_channels);
}

std::uint64_t network_macs(const NetworkSpec& net) {
  std::uint64_t total = 0;
  for (const auto& l : net.layers) total += layer_macs(l);
  return total;
}

std::uint64_t layer_weight_count(const ConvLayerSpec& layer) {
  const std::uint64_t k = static_cast<std::uint64_t>(layer.kernel);
  return k * k * static_cast<std::uint64_t>(layer.input_channels) *
         static_cast<std::uint64_t>(layer.output_channels);
}

int dominant_weight_bits(const NetworkSpec& net) {
  std::map<int, std::uint64_t> work;
  for (const auto& l : net.layers)
    for (const auto& g : l.weight_groups) work[g.bits] += group_macs(l, g);
  int best_bits = 8;
  std::uint64_t best = 0;
  for (const auto& [bits, macs] : work) {
    if (macs > best) {
      best = macs;
      best_bits = bits;
    }
  }
  return best_bits;
}

}  // namespace mpdse
