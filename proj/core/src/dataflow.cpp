#include "mpdse/dataflow.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mpdse/error.hpp"

namespace mpdse {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

struct Issue {
  int packing;
  int cycles;
};

GroupMapping map_group(const ConvLayerSpec& layer, const ArrayDims& dims, int channels, int bits,
                       Issue issue, const MappingOptions& opts) {
  const std::int64_t ih = layer.input_height;
  const std::int64_t iw = layer.input_channels;
  const std::int64_t k2 = static_cast<std::int64_t>(layer.kernel) * layer.kernel;
  const std::int64_t s2 = static_cast<std::int64_t>(layer.stride) * layer.stride;
  const std::int64_t lanes = static_cast<std::int64_t>(dims.w) * issue.packing;

  GroupMapping g;
  g.channels = channels;
  g.bits = bits;
  g.packing = issue.packing;
  g.cycles_per_issue = issue.cycles;
  g.p_ideal = Rational(ih * ih * iw * channels * k2 * issue.cycles,
                       s2 * dims.h * lanes * dims.d);
  const std::int64_t tiles =
      ceil_div(ih, dims.h) * ceil_div(iw, lanes) * ceil_div(channels, dims.d);
  // (K/S)^2 stays rational until the final cycle count.
  g.p_actual = ceil_div(tiles * ih * k2 * issue.cycles, s2);

  const double per_issue = 1.0 / issue.cycles;
  g.bits_per_cycle.weights = static_cast<double>(dims.w) * dims.d * bits * per_issue;
  g.bits_per_cycle.activations =
      static_cast<double>(dims.h) * lanes * layer.activation_bits * per_issue;
  g.bits_per_cycle.psums = static_cast<double>(dims.h) * dims.d * opts.accumulator_width *
                           (opts.psum_read_write ? 2 : 1) * per_issue;
  return g;
}

template <typename IssueFn>
LayerMapping map_layer(const ConvLayerSpec& layer, const ArrayDims& dims,
                       const MappingOptions& opts, IssueFn issue_for) {
  validate(dims);
  LayerMapping m;
  m.layer = layer.name;
  m.dims = dims;
  for (const auto& group : layer.weight_groups) {
    auto g = map_group(layer, dims, group.channels, group.bits, issue_for(group.bits), opts);
    m.p_ideal += g.p_ideal;
    m.p_actual += g.p_actual;
    m.bits_per_cycle.weights = std::max(m.bits_per_cycle.weights, g.bits_per_cycle.weights);
    m.bits_per_cycle.activations =
        std::max(m.bits_per_cycle.activations, g.bits_per_cycle.activations);
    m.bits_per_cycle.psums = std::max(m.bits_per_cycle.psums, g.bits_per_cycle.psums);
    m.groups.push_back(std::move(g));
  }
  return m;
}

}  // namespace

void validate(const ArrayDims& dims) {
  if (dims.h < 1 || dims.w < 1 || dims.d < 1)
    throw ValidationError(
        fmt::format("array dimensions must be >= 1, got ({},{},{})", dims.h, dims.w, dims.d));
}

std::int64_t n_pe(const ArrayDims& dims) {
  return static_cast<std::int64_t>(dims.h) * dims.w * dims.d;
}

BramPorts bram_npa(const ArrayDims& dims, int n_bits, int w_q) {
  validate(dims);
  if (w_q < 1 || w_q > n_bits)
    throw ValidationError(fmt::format("w_Q={} must be in [1, N={}]", w_q, n_bits));
  BramPorts p;
  p.psums = static_cast<std::int64_t>(dims.h) * dims.d;
  p.activations = static_cast<std::int64_t>(dims.h) * dims.w * (n_bits / w_q);
  p.weights = static_cast<std::int64_t>(dims.w) * dims.d;
  return p;
}

BramPorts bram_npa(const ArrayDims& dims, const PeConfig& cfg) {
  validate(dims);
  BramPorts p;
  p.psums = static_cast<std::int64_t>(dims.h) * dims.d;
  p.activations = static_cast<std::int64_t>(dims.h) * dims.w * pairs_per_issue(cfg, 1);
  p.weights = static_cast<std::int64_t>(dims.w) * dims.d;
  return p;
}

double min_bram_symmetric(std::int64_t n) {
  const auto side = static_cast<std::int64_t>(std::llround(std::cbrt(static_cast<double>(n))));
  if (side * side * side == n) return static_cast<double>(3 * side * side);
  return 3.0 * std::pow(static_cast<double>(n), 2.0 / 3.0);
}

Rational LayerMapping::utilization_exact() const {
  if (p_actual == 0) return Rational(0);
  return p_ideal / Rational(p_actual);
}

double LayerMapping::utilization() const {
  return boost::rational_cast<double>(utilization_exact());
}

LayerMapping utilization(const ConvLayerSpec& layer, const ArrayDims& dims,
                         const MappingOptions& opts) {
  return map_layer(layer, dims, opts, [&](int bits) {
    if (bits < 1 || bits > layer.activation_bits)
      throw ValidationError(fmt::format("layer '{}': w_Q={} must be in [1, N={}]", layer.name,
                                        bits, layer.activation_bits));
    return Issue{layer.activation_bits / bits, 1};
  });
}

LayerMapping utilization(const ConvLayerSpec& layer, const ArrayDims& dims, const PeConfig& cfg,
                         const MappingOptions& opts) {
  if (layer.activation_bits != cfg.style.activation_bits)
    throw ValidationError(fmt::format("layer '{}': activation width {} does not match the PE's {}",
                                      layer.name, layer.activation_bits,
                                      cfg.style.activation_bits));
  return map_layer(layer, dims, opts, [&](int bits) {
    if (bits < 1 || bits > cfg.style.activation_bits)
      throw ValidationError(fmt::format("layer '{}': w_Q={} must be in [1, N={}]", layer.name,
                                        bits, cfg.style.activation_bits));
    return Issue{pairs_per_issue(cfg, bits), cycles_per_issue(cfg, bits)};
  });
}

NetworkMapping network_cycles(const NetworkSpec& net, const ArrayDims& dims,
                              const MappingOptions& opts) {
  NetworkMapping m;
  m.dims = dims;
  for (const auto& layer : net.layers) {
    m.layers.push_back(utilization(layer, dims, opts));
    m.total_cycles += m.layers.back().p_actual;
  }
  return m;
}

NetworkMapping network_cycles(const NetworkSpec& net, const ArrayDims& dims, const PeConfig& cfg,
                              const MappingOptions& opts) {
  NetworkMapping m;
  m.dims = dims;
  for (const auto& layer : net.layers) {
    m.layers.push_back(utilization(layer, dims, cfg, opts));
    m.total_cycles += m.layers.back().p_actual;
  }
  return m;
}

StreamBits bandwidth_required(const LayerMapping& mapping, double f_mhz) {
  const double hz = f_mhz * 1e6;
  return {mapping.bits_per_cycle.weights * hz, mapping.bits_per_cycle.activations * hz,
          mapping.bits_per_cycle.psums * hz};
}

std::int64_t layer_cycles(const ConvLayerSpec& layer, const ArrayDims& dims, const PeConfig& cfg) {
  const std::int64_t ih = layer.input_height;
  const std::int64_t k2 = static_cast<std::int64_t>(layer.kernel) * layer.kernel;
  const std::int64_t s2 = static_cast<std::int64_t>(layer.stride) * layer.stride;
  std::int64_t total = 0;
  for (const auto& g : layer.weight_groups) {
    const std::int64_t lanes = static_cast<std::int64_t>(dims.w) * pairs_per_issue(cfg, g.bits);
    const std::int64_t tiles = ceil_div(ih, dims.h) * ceil_div(layer.input_channels, lanes) *
                               ceil_div(g.channels, dims.d);
    total += ceil_div(tiles * ih * k2 * cycles_per_issue(cfg, g.bits), s2);
  }
  return total;
}

BufferPlan size_buffers(const NetworkSpec& net, int accumulator_width) {
  BufferPlan plan;
  for (const auto& layer : net.layers) {
    const std::uint64_t in_side = static_cast<std::uint64_t>(layer.input_height);
    const std::uint64_t out_side = static_cast<std::uint64_t>(layer.output_height());
    const std::uint64_t in_map = in_side * in_side * static_cast<std::uint64_t>(layer.input_channels);
    const std::uint64_t out_map =
        out_side * out_side * static_cast<std::uint64_t>(layer.output_channels);
    std::uint64_t weights = 0;
    const std::uint64_t per_channel = static_cast<std::uint64_t>(layer.kernel) * layer.kernel *
                                      static_cast<std::uint64_t>(layer.input_channels);
    for (const auto& g : layer.weight_groups)
      weights += per_channel * static_cast<std::uint64_t>(g.channels) *
                 static_cast<std::uint64_t>(g.bits);

    plan.weight_bits = std::max(plan.weight_bits, weights);
    plan.activation_bits = std::max(
        plan.activation_bits,
        std::max(in_map, out_map) * static_cast<std::uint64_t>(layer.activation_bits));
    plan.psum_bits =
        std::max(plan.psum_bits, out_map * static_cast<std::uint64_t>(accumulator_width));
  }
  return plan;
}

BufferPlan assign_blocks(BufferPlan plan, const BramPorts& ports, std::int64_t block_bits) {
  if (block_bits < 1) throw ValidationError("block size must be >= 1 bit");
  plan.block_bits = block_bits;
  plan.ports = ports;
  Rational fractional{0};
  auto size = [&](std::uint64_t bits, std::int64_t port_count) -> std::int64_t {
    if (bits == 0) return 0;
    const Rational exact(static_cast<std::int64_t>(bits), block_bits);
    fractional += std::max(exact, Rational(port_count));
    return std::max(ceil_div(static_cast<std::int64_t>(bits), block_bits), port_count);
  };
  plan.weight_blocks = size(plan.weight_bits, ports.weights);
  plan.activation_blocks = size(plan.activation_bits, ports.activations);
  plan.psum_blocks = size(plan.psum_bits, ports.psums);
  plan.total_blocks = ceil_div(fractional.numerator(), fractional.denominator());
  return plan;
}

BufferPlan buffer_plan(const NetworkSpec& net, const ArrayDims& dims, const PeConfig& cfg,
                       std::int64_t block_bits, int accumulator_width) {
  return assign_blocks(size_buffers(net, accumulator_width), bram_npa(dims, cfg), block_bits);
}

}  // namespace mpdse
