#pragma once

// Analytical mapping of CONV layers onto an H x W x D PE array: parallel
// BRAM ports, per-layer cycle counts and utilization, stream bandwidth and
// global buffer sizing.

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "mpdse/pe.hpp"
#include "mpdse/workload.hpp"

namespace mpdse {

using Rational = boost::rational<std::int64_t>;

/// H reuses weights, W reuses partial sums, D reuses activations.
struct ArrayDims {
  int h = 1;
  int w = 1;
  int d = 1;

  friend auto operator<=>(const ArrayDims&, const ArrayDims&) = default;
};

/// Throws ValidationError when any side is < 1.
void validate(const ArrayDims& dims);

/// H * W * D.
std::int64_t n_pe(const ArrayDims& dims);

/// Parallel BRAM accesses per cycle, split per global buffer.
struct BramPorts {
  std::int64_t psums = 0;        // H * D
  std::int64_t activations = 0;  // H * W * lanes
  std::int64_t weights = 0;      // W * D

  std::int64_t total() const { return psums + activations + weights; }
};

/// Ports for a given weight word-length, packing floor(N / w_q) pairs per PE.
/// Throws ValidationError unless 1 <= w_q <= n_bits.
BramPorts bram_npa(const ArrayDims& dims, int n_bits, int w_q);

/// Ports provisioned at design time: sized for the largest lane count the
/// PE can reach (N/k for BP designs, 1 for BS).
BramPorts bram_npa(const ArrayDims& dims, const PeConfig& cfg);

/// 3 * n^(2/3); exact for perfect cubes.
double min_bram_symmetric(std::int64_t n_pe);

struct MappingOptions {
  int accumulator_width = 30;
  /// Counts one read and one write per partial-sum port and cycle; false
  /// counts the write only.
  bool psum_read_write = true;
};

/// Bits moved per cycle (or per second, see bandwidth_required) per stream.
struct StreamBits {
  double weights = 0.0;
  double activations = 0.0;
  double psums = 0.0;

  double total() const { return weights + activations + psums; }
};

/// Mapping of one contiguous precision group of output channels.
struct GroupMapping {
  int channels = 0;
  int bits = 8;
  int packing = 1;           // weight-activation pairs per PE and issue
  int cycles_per_issue = 1;
  Rational p_ideal{0};
  std::int64_t p_actual = 0;
  StreamBits bits_per_cycle;
};

struct LayerMapping {
  std::string layer;
  ArrayDims dims;
  std::vector<GroupMapping> groups;
  Rational p_ideal{0};
  std::int64_t p_actual = 0;
  /// Peak per-stream demand over the groups.
  StreamBits bits_per_cycle;

  Rational utilization_exact() const;
  double utilization() const;
  /// Packing of the first group; channel-wise layers carry one per group.
  int packing() const { return groups.empty() ? 1 : groups.front().packing; }
};

/// Mapping with packing floor(N / w_Q) and single-cycle issue.
/// P_ideal = I_H^2 I_W O_D K^2 / (S^2 H W pack D),
/// P_actual = ceil(ceil(I_H/H) ceil(I_W/(W pack)) ceil(O_D/D) I_H K^2 / S^2).
/// Channel-wise layers are mapped per group and summed.
LayerMapping utilization(const ConvLayerSpec& layer, const ArrayDims& dims,
                         const MappingOptions& opts = {});

/// Same with the PE's lane count and issue latency: pack = pairs_per_issue
/// and both cycle counts scale with cycles_per_issue.
LayerMapping utilization(const ConvLayerSpec& layer, const ArrayDims& dims, const PeConfig& cfg,
                         const MappingOptions& opts = {});

/// P_actual of utilization(layer, dims, cfg) without building the mapping.
std::int64_t layer_cycles(const ConvLayerSpec& layer, const ArrayDims& dims, const PeConfig& cfg);

struct NetworkMapping {
  ArrayDims dims;
  std::int64_t total_cycles = 0;
  std::vector<LayerMapping> layers;
};

/// Layers are evaluated one after another; no inter-layer overlap.
NetworkMapping network_cycles(const NetworkSpec& net, const ArrayDims& dims,
                              const MappingOptions& opts = {});
NetworkMapping network_cycles(const NetworkSpec& net, const ArrayDims& dims, const PeConfig& cfg,
                              const MappingOptions& opts = {});

/// Per-stream bits/s at clock f_mhz.
StreamBits bandwidth_required(const LayerMapping& mapping, double f_mhz);

struct BufferPlan {
  std::uint64_t weight_bits = 0;
  std::uint64_t activation_bits = 0;
  std::uint64_t psum_bits = 0;
  BramPorts ports;
  std::int64_t block_bits = 20000;
  std::int64_t weight_blocks = 0;
  std::int64_t activation_blocks = 0;
  std::int64_t psum_blocks = 0;
  /// Blocks for all three buffers, packing their fractional remainders.
  std::int64_t total_blocks = 0;
};

/// Whole-layer-resident buffers: the largest layer's weights at their
/// word-lengths, the largest input or output feature map at N bits, and the
/// largest output map at accumulator_width bits. Each non-empty buffer needs
/// at least one block per parallel port.
BufferPlan buffer_plan(const NetworkSpec& net, const ArrayDims& dims, const PeConfig& cfg,
                       std::int64_t block_bits = 20000, int accumulator_width = 30);

/// The two halves of buffer_plan: sizes only, then blocks for given ports.
BufferPlan size_buffers(const NetworkSpec& net, int accumulator_width = 30);
BufferPlan assign_blocks(BufferPlan sized, const BramPorts& ports, std::int64_t block_bits);

}  // namespace mpdse
