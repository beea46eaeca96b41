#pragma once

// CONV-layer workload description: layer shapes, per-layer (or per
// output-channel group) weight word-lengths, the JSON workload format and
// built-in ResNet generators for 224x224 inputs.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mpdse {

enum class LayerTag { stem, block, projection };

std::string_view to_string(LayerTag tag);
LayerTag parse_layer_tag(std::string_view text);

/// Contiguous block of output channels sharing one weight word-length.
struct PrecisionGroup {
  int channels = 0;
  int bits = 8;

  friend bool operator==(const PrecisionGroup&, const PrecisionGroup&) = default;
};

/// One convolution layer. Feature maps and kernels are square; the output
/// side follows the same-padding convention ceil(input_height / stride).
struct ConvLayerSpec {
  std::string name;
  int input_height = 1;     // I_H, pixels per side
  int input_channels = 1;   // I_W
  int output_channels = 1;  // O_D
  int kernel = 1;           // K
  int stride = 1;           // S
  int activation_bits = 8;  // N
  /// Output-channel groups in channel order; a single entry for layer-wise
  /// precision. Group sizes sum to output_channels.
  std::vector<PrecisionGroup> weight_groups{{1, 8}};
  LayerTag tag = LayerTag::block;

  int output_height() const { return (input_height + stride - 1) / stride; }
  bool channelwise() const { return weight_groups.size() > 1; }
  int max_weight_bits() const;
  int min_weight_bits() const;

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Builds a layer with one precision group covering every output channel.
ConvLayerSpec make_layer(std::string name, int input_height, int input_channels,
                         int output_channels, int kernel, int stride,
                         int weight_bits, LayerTag tag = LayerTag::block,
                         int activation_bits = 8);

struct NetworkSpec {
  std::string name;
  std::vector<ConvLayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct WorkloadLimits {
  std::vector<int> supported_weight_bits{1, 2, 4, 8};
};

/// Throws ValidationError naming the layer and field on the first violation.
void validate(const ConvLayerSpec& layer, const WorkloadLimits& limits = {});
void validate(const NetworkSpec& net, const WorkloadLimits& limits = {});

/// Merges adjacent groups with equal word-lengths.
std::vector<PrecisionGroup> normalize_groups(std::vector<PrecisionGroup> groups);

/// Parses the strict JSON workload format. Syntax errors carry the line
/// number; invariant violations name the layer and field.
NetworkSpec parse_workload(std::string_view text, const WorkloadLimits& limits = {});
NetworkSpec load_workload(const std::string& path, const WorkloadLimits& limits = {});
std::string serialize_workload(const NetworkSpec& net);

/// Standard ResNet CONV layers (stem, 3x3/1x1 block convs and projection
/// shortcuts) for a 224x224 input; the fully-connected head is omitted.
/// The stem keeps 8-bit weights, every other layer uses `wq_inner`.
NetworkSpec resnet(int depth, int wq_inner);

/// Resolves "resnet18" / "resnet50" / "resnet152"; throws ValidationError
/// for unknown names.
NetworkSpec builtin_network(std::string_view name, int wq_inner);
bool is_builtin_network(std::string_view name);

/// Multiply-accumulates of one layer: out^2 * K^2 * I_W * O_D.
std::uint64_t layer_macs(const ConvLayerSpec& layer);
std::uint64_t group_macs(const ConvLayerSpec& layer, const PrecisionGroup& group);
std::uint64_t network_macs(const NetworkSpec& net);

/// Weight count K^2 * I_W * channels.
std::uint64_t layer_weight_count(const ConvLayerSpec& layer);

/// Word-length carrying the most MACs across the net (ties go to the
/// smaller word-length).
int dominant_weight_bits(const NetworkSpec& net);

}  // namespace mpdse
